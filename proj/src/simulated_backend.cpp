#include "swarmci/simulated_backend.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace swarmci {

namespace {

using nlohmann::json;

// splitmix64; hand-rolled so modeled times are bit-identical everywhere.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
}

std::string format_seconds(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

double conf_number(const json& conf, const char* key, double fallback) {
    if (!conf.contains(key)) return fallback;
    if (!conf.at(key).is_number())
        throw SchemaViolation(std::string("simulated conf: ") + key +
                              " must be a number");
    return conf.at(key).get<double>();
}

}  // namespace

SimulatedConf SimulatedConf::from_json(const json& conf) {
    SimulatedConf c;
    if (!conf.is_object()) {
        if (conf.is_null()) return c;
        throw SchemaViolation("simulated conf must be an object");
    }
    if (conf.contains("seed")) {
        if (!conf.at("seed").is_number_integer())
            throw SchemaViolation("simulated conf: seed must be an integer");
        c.seed = conf.at("seed").get<std::uint64_t>();
    }
    c.base_latency_s = conf_number(conf, "base_latency_s", c.base_latency_s);
    c.per_node_latency_s = conf_number(conf, "per_node_latency_s", c.per_node_latency_s);
    c.jitter_pct = conf_number(conf, "jitter_pct", c.jitter_pct);
    c.workload_t1_s = conf_number(conf, "workload_t1_s", c.workload_t1_s);
    if (conf.contains("capacity")) {
        if (!conf.at("capacity").is_number_integer())
            throw SchemaViolation("simulated conf: capacity must be an integer");
        c.capacity = conf.at("capacity").get<int>();
    }
    auto read_points = [&](const char* key, std::set<std::string>& into) {
        if (!conf.contains(key)) return;
        if (!conf.at(key).is_array())
            throw SchemaViolation(std::string("simulated conf: ") + key +
                                  " must be an array of \"NxP\" labels");
        for (const auto& v : conf.at(key)) {
            if (!v.is_string())
                throw SchemaViolation(std::string("simulated conf: ") + key +
                                      " entries must be strings");
            parse_point_label(v.get<std::string>());  // validates shape
            into.insert(v.get<std::string>());
        }
    };
    read_points("fail_points", c.fail_points);
    read_points("timeout_points", c.timeout_points);
    if (conf.contains("fail_exit_code")) {
        if (!conf.at("fail_exit_code").is_number_integer())
            throw SchemaViolation("simulated conf: fail_exit_code must be an integer");
        c.fail_exit_code = conf.at("fail_exit_code").get<int>();
    }
    if (conf.contains("fail_provision")) {
        if (!conf.at("fail_provision").is_boolean())
            throw SchemaViolation("simulated conf: fail_provision must be a boolean");
        c.fail_provision = conf.at("fail_provision").get<bool>();
    }
    return c;
}

std::vector<ValidationFinding> SimulatedConf::validate(const json& conf,
                                                       const std::string& prefix,
                                                       int /*required_nodes*/) {
    std::vector<ValidationFinding> findings;
    try {
        SimulatedConf c = from_json(conf);
        if (c.base_latency_s < 0)
            findings.push_back({prefix + ".base_latency_s", "must be >= 0"});
        if (c.per_node_latency_s < 0)
            findings.push_back({prefix + ".per_node_latency_s", "must be >= 0"});
        if (c.jitter_pct < 0 || c.jitter_pct > 100)
            findings.push_back({prefix + ".jitter_pct", "must be in [0, 100]"});
        if (c.workload_t1_s <= 0)
            findings.push_back({prefix + ".workload_t1_s", "must be > 0"});
        if (c.capacity && *c.capacity < 1)
            findings.push_back({prefix + ".capacity", "must be >= 1"});
    } catch (const SchemaViolation& e) {
        findings.push_back({prefix, e.what()});
    }
    return findings;
}

double SimulatedBackend::jitter_factor(std::uint64_t a, std::uint64_t b) const {
    if (conf_.jitter_pct == 0) return 1.0;
    std::uint64_t bits = mix64(conf_.seed ^ mix64(a ^ mix64(b)));
    double centered = 2.0 * unit_interval(bits) - 1.0;  // [-1, 1)
    return 1.0 + centered * conf_.jitter_pct / 100.0;
}

double SimulatedBackend::modeled_provision_s(int node_count) const {
    double base = conf_.base_latency_s + conf_.per_node_latency_s * node_count;
    return base * jitter_factor(0x70726f76ULL, static_cast<std::uint64_t>(node_count));
}

double SimulatedBackend::modeled_wall_s(const ScalePoint& p) const {
    double base = conf_.workload_t1_s / static_cast<double>(p.total_procs());
    return base * jitter_factor(static_cast<std::uint64_t>(p.nodes),
                                static_cast<std::uint64_t>(p.procs_per_node));
}

Allocation SimulatedBackend::do_provision(int node_count) {
    if (conf_.fail_provision)
        throw BackendError("injected provision failure");
    if (conf_.capacity && node_count > *conf_.capacity)
        throw InsufficientCapacity("requested " + std::to_string(node_count) +
                                   " nodes, simulated capacity is " +
                                   std::to_string(*conf_.capacity));
    Allocation alloc;
    alloc.alloc_id = next_alloc_id("sim");
    alloc.node_handles.reserve(node_count);
    for (int i = 0; i < node_count; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "sim-node-%03d", i);
        alloc.node_handles.emplace_back(buf);
    }
    alloc.provision_wall_time_s = modeled_provision_s(node_count);
    return alloc;
}

LaunchResult SimulatedBackend::do_launch(const Allocation&, const LaunchRequest& req) {
    const std::string label = point_label(req.point);

    LaunchResult result;
    result.output_path = req.output_sink;

    std::ofstream out(req.output_sink, std::ios::binary);
    if (!out)
        throw LaunchFailure("cannot write output sink " + req.output_sink.string());
    out << "# simulated scalability run\n";
    out << "# point=" << label << " total_procs=" << req.point.total_procs() << "\n";

    if (conf_.timeout_points.count(label)) {
        result.timed_out = true;
        result.exit_code = 124;
        result.wall_time_s = req.timeout_s;
        out << "# killed: point exceeded its timeout\n";
        return result;
    }

    double wall = modeled_wall_s(req.point);
    if (wall > req.timeout_s) {
        result.timed_out = true;
        result.exit_code = 124;
        result.wall_time_s = req.timeout_s;
        out << "# killed: modeled time " << format_seconds(wall)
            << "s exceeded the timeout\n";
        return result;
    }

    result.wall_time_s = wall;
    if (conf_.fail_points.count(label)) {
        result.exit_code = conf_.fail_exit_code;
        out << "# injected failure, exit=" << conf_.fail_exit_code << "\n";
        return result;
    }

    result.exit_code = 0;
    out << "elapsed=" << format_seconds(wall) << "\n";
    return result;
}

void SimulatedBackend::do_teardown(const Allocation&) {}

}  // namespace swarmci
