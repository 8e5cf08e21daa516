#include "swarmci/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "swarmci/backend_registry.hpp"
#include "swarmci/planner.hpp"

namespace swarmci {

namespace {

using nlohmann::json;

bool has_whitespace(const std::string& s) {
    for (unsigned char c : s)
        if (std::isspace(c)) return true;
    return false;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key))
        throw SchemaViolation("missing required field " + path + "." + key);
    const json& v = obj.at(key);
    if (!v.is_string())
        throw SchemaViolation(path + "." + key + " must be a string");
    return v.get<std::string>();
}

int require_int(const json& v, const std::string& path) {
    if (!v.is_number_integer())
        throw SchemaViolation(path + " must be an integer");
    return v.get<int>();
}

AxisRange require_range(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key))
        throw SchemaViolation("missing required field " + path + "." + key);
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2)
        throw SchemaViolation(path + "." + key + " must be a [min, max] pair");
    AxisRange r;
    r.lo = require_int(v[0], path + "." + key + "[0]");
    r.hi = require_int(v[1], path + "." + key + "[1]");
    if (r.lo < 1)
        throw RangeError(path + "." + key + " minimum must be >= 1, got " +
                         std::to_string(r.lo));
    if (r.lo > r.hi)
        throw RangeError(path + "." + key + " has min > max (" + std::to_string(r.lo) +
                         " > " + std::to_string(r.hi) + ")");
    return r;
}

ScalabilitySpec parse_scalability(const json& block, TaskSpec& spec) {
    const std::string path = "$.task_conf.scalability_test";
    ScalabilitySpec s;
    s.script = require_string(block, "script", path);
    if (s.script.empty())
        throw SchemaViolation(path + ".script must be nonempty");
    s.num_of_nodes = require_range(block, "num_of_nodes", path);
    s.proc_per_node = require_range(block, "proc_per_node", path);

    std::string mode = require_string(block, "mode", path);
    if (mode == "linear")
        s.mode = ScaleMode::linear;
    else if (mode == "log")
        s.mode = ScaleMode::log2;
    else
        throw SchemaViolation(path + ".mode must be \"linear\" or \"log\", got \"" +
                              mode + "\"");

    if (block.contains("step")) {
        s.step = require_int(block.at("step"), path + ".step");
        if (s.step < 1)
            throw RangeError(path + ".step must be >= 1, got " + std::to_string(s.step));
        if (s.mode == ScaleMode::log2) {
            spec.warnings.push_back({path + ".step", "step is ignored in log mode"});
            s.step = 1;
        }
    }
    if (block.contains("repeats")) {
        s.repeats = require_int(block.at("repeats"), path + ".repeats");
        if (s.repeats < 1)
            throw RangeError(path + ".repeats must be >= 1, got " +
                             std::to_string(s.repeats));
    }

    static const char* known[] = {"script", "num_of_nodes", "proc_per_node",
                                  "mode",   "step",         "repeats"};
    for (const auto& [key, value] : block.items()) {
        bool is_known = false;
        for (const char* k : known) is_known |= (key == k);
        if (!is_known) {
            spec.scalability_extras[key] = value;
            spec.warnings.push_back({path + "." + key, "unknown key ignored"});
        }
    }
    return s;
}

}  // namespace

std::string to_string(ScaleMode mode) {
    return mode == ScaleMode::linear ? "linear" : "log";
}

bool TaskSpec::operator==(const TaskSpec& other) const {
    return task_name == other.task_name && exec_target == other.exec_target &&
           image_ref == other.image_ref && scalability == other.scalability &&
           backend_conf == other.backend_conf &&
           backend_conf_nested == other.backend_conf_nested &&
           docker_extras == other.docker_extras &&
           task_conf_extras == other.task_conf_extras &&
           scalability_extras == other.scalability_extras && extras == other.extras;
}

TaskSpec parse_taskspec(const std::string& raw) {
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw MalformedJson(std::string("beefile is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw SchemaViolation("beefile root must be a JSON object");

    TaskSpec spec;

    if (!doc.contains("task_conf") || !doc.at("task_conf").is_object())
        throw SchemaViolation("missing required object $.task_conf");
    const json& task_conf = doc.at("task_conf");

    spec.task_name = require_string(task_conf, "task_name", "$.task_conf");
    if (spec.task_name.empty())
        throw SchemaViolation("$.task_conf.task_name must be nonempty");
    if (has_whitespace(spec.task_name))
        throw SchemaViolation("$.task_conf.task_name must not contain whitespace");

    spec.exec_target = require_string(task_conf, "exec_target", "$.task_conf");
    if (!backend_known(spec.exec_target)) {
        std::string known;
        for (const auto& n : known_backends()) known += (known.empty() ? "" : ", ") + n;
        throw UnknownBackend("unknown exec_target \"" + spec.exec_target +
                             "\" (known backends: " + known + ")");
    }

    if (!task_conf.contains("scalability_test") ||
        !task_conf.at("scalability_test").is_object())
        throw SchemaViolation("missing required object $.task_conf.scalability_test");
    spec.scalability = parse_scalability(task_conf.at("scalability_test"), spec);

    for (const auto& [key, value] : task_conf.items()) {
        if (key == "task_name" || key == "exec_target" || key == "scalability_test")
            continue;
        spec.task_conf_extras[key] = value;
        spec.warnings.push_back({"$.task_conf." + key, "unknown key ignored"});
    }

    if (doc.contains("docker_conf")) {
        const json& dc = doc.at("docker_conf");
        if (!dc.is_object())
            throw SchemaViolation("$.docker_conf must be an object");
        for (const auto& [key, value] : dc.items()) {
            if (key == "docker_img_tag") {
                if (!value.is_string())
                    throw SchemaViolation("$.docker_conf.docker_img_tag must be a string");
                spec.image_ref = value.get<std::string>();
            } else {
                spec.docker_extras[key] = value;
            }
        }
    }

    if (doc.contains("exec_env_conf")) {
        const json& ec = doc.at("exec_env_conf");
        if (!ec.is_object())
            throw SchemaViolation("$.exec_env_conf must be an object");
        if (ec.contains(spec.exec_target)) {
            if (!ec.at(spec.exec_target).is_object())
                throw SchemaViolation("$.exec_env_conf." + spec.exec_target +
                                      " must be an object");
            spec.backend_conf = ec.at(spec.exec_target);
            spec.backend_conf_nested = true;
        } else {
            spec.backend_conf = ec;
        }
    }

    for (const auto& [key, value] : doc.items()) {
        if (key == "task_conf" || key == "docker_conf" || key == "exec_env_conf")
            continue;
        spec.extras[key] = value;
        spec.warnings.push_back({"$." + key, "unknown top-level key ignored"});
    }

    return spec;
}

TaskSpec parse_taskspec_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw MalformedJson("cannot read beefile: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_taskspec(buf.str());
}

std::string serialize_taskspec(const TaskSpec& spec) {
    json scal = spec.scalability_extras;
    scal["script"] = spec.scalability.script;
    scal["num_of_nodes"] = {spec.scalability.num_of_nodes.lo, spec.scalability.num_of_nodes.hi};
    scal["proc_per_node"] = {spec.scalability.proc_per_node.lo, spec.scalability.proc_per_node.hi};
    scal["mode"] = to_string(spec.scalability.mode);
    if (spec.scalability.mode == ScaleMode::linear)
        scal["step"] = spec.scalability.step;
    if (spec.scalability.repeats != 1)
        scal["repeats"] = spec.scalability.repeats;

    json task_conf = spec.task_conf_extras;
    task_conf["task_name"] = spec.task_name;
    task_conf["exec_target"] = spec.exec_target;
    task_conf["scalability_test"] = scal;

    json doc = spec.extras;
    doc["task_conf"] = task_conf;

    if (!spec.image_ref.empty() || !spec.docker_extras.empty()) {
        json dc = spec.docker_extras;
        if (!spec.image_ref.empty())
            dc["docker_img_tag"] = spec.image_ref;
        doc["docker_conf"] = dc;
    }

    if (spec.backend_conf_nested) {
        doc["exec_env_conf"] = json{{spec.exec_target, spec.backend_conf}};
    } else if (!spec.backend_conf.empty()) {
        doc["exec_env_conf"] = spec.backend_conf;
    }

    return doc.dump(2) + "\n";
}

std::string backend_conf_path(const TaskSpec& spec) {
    return spec.backend_conf_nested ? "$.exec_env_conf." + spec.exec_target
                                    : "$.exec_env_conf";
}

std::vector<ValidationFinding> validate_backend_conf(const TaskSpec& spec) {
    int needed = 0;
    try {
        needed = required_nodes(expand_matrix(spec.scalability));
    } catch (const MatrixTooLarge& e) {
        return {{"$.task_conf.scalability_test", e.what()}};
    }
    return validate_backend_conf_block(spec.exec_target, spec.backend_conf,
                                       backend_conf_path(spec), needed);
}

}  // namespace swarmci
