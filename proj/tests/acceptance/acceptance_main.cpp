// Acceptance suite: one scenario per release criterion, one PASS/FAIL line
// each. Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "swarmci/backend_registry.hpp"
#include "swarmci/cli.hpp"
#include "swarmci/config.hpp"
#include "swarmci/executor.hpp"
#include "swarmci/planner.hpp"
#include "swarmci/publisher.hpp"
#include "swarmci/results.hpp"
#include "swarmci/simulated_backend.hpp"
#include "swarmci/subprocess.hpp"

#include "../test_util.hpp"

using namespace swarmci;
using nlohmann::json;
using testutil::TempDir;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw CheckFailure(what);
}

void require_near(double got, double want, double tol, const std::string& what) {
    if (std::abs(got - want) > tol)
        throw CheckFailure(what + ": got " + std::to_string(got) + ", want " +
                           std::to_string(want) + " +/- " + std::to_string(tol));
}

int count_calls(const Backend& b, BackendCallKind kind) {
    int n = 0;
    for (const auto& c : b.call_log())
        if (c.kind == kind) ++n;
    return n;
}

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args,
              std::map<std::string, std::string> env = {}) {
    std::ostringstream out, err;
    CliServices services;
    services.use_process_env = false;
    services.env = std::move(env);
    int code = run_cli(args, out, err, services);
    return {code, out.str(), err.str()};
}

json trailing_json(const std::string& text) {
    auto pos = text.find("\n{\n");
    require(pos != std::string::npos, "no JSON block in CLI output");
    return json::parse(text.substr(pos + 1));
}

std::string git_in(const std::filesystem::path& repo, std::vector<std::string> args) {
    CommandSpec spec;
    spec.argv = {"git", "-C", repo.string()};
    spec.argv.insert(spec.argv.end(), args.begin(), args.end());
    spec.timeout_s = 60;
    auto r = run_command(spec);
    require(r.exit_code == 0, "git " + args.front() + " failed: " + r.err);
    return r.out;
}

// --- criterion 1: matrix expansion ------------------------------------------

void criterion_matrix_expansion() {
    ScalabilitySpec spec;
    spec.script = "./s.sh";
    spec.num_of_nodes = {1, 32};
    spec.proc_per_node = {1, 16};
    spec.mode = ScaleMode::log2;

    RunMatrix matrix = expand_matrix(spec);
    require(matrix.points.size() == 30, "reference config must yield 30 points");
    require(matrix.max_nodes == 32, "reference config must need 32 nodes");

    std::set<std::pair<int, int>> unique;
    for (const auto& p : matrix.points) unique.insert({p.nodes, p.procs_per_node});
    require(unique.size() == 30, "points must be unique");
    for (std::size_t i = 1; i < matrix.points.size(); ++i)
        require(scale_point_less(matrix.points[i - 1], matrix.points[i]),
                "points must be sorted by (total_procs, nodes)");

    // oracle equivalence for every range with hi <= 256
    for (int lo = 1; lo <= 256; ++lo) {
        for (int hi = lo; hi <= 256; ++hi) {
            std::vector<int> oracle;
            for (long long v = lo; v <= hi; v *= 2)
                oracle.push_back(static_cast<int>(v));
            if (oracle.back() != hi) oracle.push_back(hi);
            if (expand_axis({lo, hi}, ScaleMode::log2) != oracle)
                throw CheckFailure("axis mismatch vs oracle at [" +
                                   std::to_string(lo) + "," + std::to_string(hi) +
                                   "]");
        }
    }
}

// --- criterion 2: single provision, single teardown --------------------------

void criterion_single_provision() {
    TempDir dir;
    std::mt19937 rng(777);
    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    for (int round = 0; round < 100; ++round) {
        TaskSpec spec;
        spec.task_name = "rand" + std::to_string(round);
        spec.exec_target = "simulated";
        spec.scalability.script = "./s.sh";
        int nlo = pick(1, 4);
        int plo = pick(1, 4);
        spec.scalability.num_of_nodes = {nlo, nlo + pick(0, 12)};
        spec.scalability.proc_per_node = {plo, plo + pick(0, 12)};
        spec.scalability.mode = pick(0, 1) ? ScaleMode::log2 : ScaleMode::linear;
        spec.scalability.step = pick(1, 4);

        RunMatrix matrix = expand_matrix(spec.scalability);

        SimulatedConf conf;
        conf.seed = static_cast<std::uint64_t>(round);
        conf.base_latency_s = 3.0;
        conf.per_node_latency_s = 0.05;
        conf.jitter_pct = 1.0;
        conf.workload_t1_s = 2.0;
        // inject failures and timeouts at random points
        for (int i = 0; i < pick(0, 2); ++i) {
            const auto& p = matrix.points[static_cast<std::size_t>(
                pick(0, static_cast<int>(matrix.points.size()) - 1))];
            conf.fail_points.insert(point_label(p));
        }
        for (int i = 0; i < pick(0, 2); ++i) {
            const auto& p = matrix.points[static_cast<std::size_t>(
                pick(0, static_cast<int>(matrix.points.size()) - 1))];
            conf.timeout_points.insert(point_label(p));
        }
        SimulatedBackend backend(conf);

        JobOptions opts;
        opts.output_root = dir / ("out" + std::to_string(round));
        opts.job_timeout_s = pick(0, 3) == 0 ? pick(2, 8)   // tight: forces JobTimeout
                                             : 3600.0;
        opts.policy = pick(0, 1) ? PointFailurePolicy::fail_fast
                                 : PointFailurePolicy::keep_going;

        JobOutcome outcome = run_job(spec, matrix, backend, opts);

        require(count_calls(backend, BackendCallKind::provision) == 1,
                "exactly one provision per job");
        require(backend.call_log().front().kind == BackendCallKind::provision &&
                    backend.call_log().front().node_count == required_nodes(matrix),
                "provision size must equal required_nodes");
        require(count_calls(backend, BackendCallKind::teardown) == 1,
                "exactly one teardown per job");
        require(outcome.records.size() <= matrix.points.size(), "records bounded");
        for (std::size_t i = 0; i < outcome.records.size(); ++i)
            require(outcome.records[i].point == matrix.points[i],
                    "records must be a prefix in matrix order");
    }
}

// --- criterion 3: perfect-scaling end to end ---------------------------------

void criterion_perfect_scaling() {
    TempDir dir;
    json beefile = {
        {"task_conf",
         {{"task_name", "perfect"},
          {"exec_target", "simulated"},
          {"scalability_test",
           {{"script", "./workload.sh"},
            {"num_of_nodes", {1, 1}},
            {"proc_per_node", {1, 16}},
            {"mode", "log"}}}}},
        {"exec_env_conf",
         {{"seed", 7},
          {"base_latency_s", 5.0},
          {"per_node_latency_s", 0.5},
          {"jitter_pct", 0.0},
          {"workload_t1_s", 8.0}}},
    };
    testutil::write_file(dir / "beefile.json", beefile.dump(2));

    auto r = cli({"run", (dir / "beefile.json").string(),
                  "--output-root", (dir / "outputs").string(),
                  "--result-dir", dir.path.string(), "--timeout", "120"},
                 {{"BUILD_NUM", "3"}});
    require(r.exit_code == 0, "pipeline must exit 0, stderr: " + r.err);

    ResultTable table = read_result_csv(dir / "scalability_test_result_3.csv");
    auto speedups = compute_speedup(table, "elapsed", {1, 1});
    require(speedups.size() == 5, "five scale points expected");
    for (const auto& e : speedups) {
        const double expected = static_cast<double>(e.point.total_procs());
        require(std::abs(e.speedup - expected) / expected <= 0.01,
                "speedup at " + point_label(e.point) + " must be " +
                    std::to_string(expected) + " within 1%, got " +
                    std::to_string(e.speedup));
    }
}

// --- criterion 4: reported-curve fixture -------------------------------------

void criterion_reported_curve_fixture() {
    // Fixture encodes the published single-node and two-node speedup curves:
    // single node spans 1.73x-4.01x, two nodes 1.05x-1.40x, elapsed values
    // chosen so value(baseline)/value(point) reproduces those numbers.
    static const char* fixture_csv =
        "nodes,procs_per_node,total_procs,metric,value\n"
        "1,2,2,elapsed,100\n"
        "1,4,4,elapsed,57.8035\n"
        "1,8,8,elapsed,39.6825\n"
        "1,16,16,elapsed,30.303\n"
        "1,32,32,elapsed,24.9377\n"
        "2,1,2,elapsed,120\n"
        "2,2,4,elapsed,114.2857\n"
        "2,4,8,elapsed,100\n"
        "2,8,16,elapsed,90.9091\n"
        "2,16,32,elapsed,85.7143\n";
    const std::map<std::string, double> expected = {
        {"1x2", 1.0},  {"1x4", 1.73},  {"1x8", 2.52},
        {"1x16", 3.30}, {"1x32", 4.01}, {"2x1", 1.0},
        {"2x2", 1.05},  {"2x4", 1.20},  {"2x8", 1.32},
        {"2x16", 1.40},
    };

    TempDir dir;
    testutil::write_file(dir / "scalability_test_result_88.csv", fixture_csv);

    auto r = cli({"analyze", dir.path.string(), "--json"});
    require(r.exit_code == 0, "analyze must exit 0, stderr: " + r.err);
    json doc = trailing_json(r.out);

    std::map<int, std::pair<double, double>> ranges;  // nodes -> (min, max) off-baseline
    for (const auto& [nodes, entries] : doc.at("speedup").items()) {
        for (const auto& e : entries) {
            ScalePoint p{e.at("nodes").get<int>(), e.at("procs_per_node").get<int>()};
            const double got = e.at("speedup").get<double>();
            require_near(got, expected.at(point_label(p)), 0.01,
                         "speedup at " + point_label(p));
            if (got > 1.0) {
                auto& [mn, mx] = ranges[std::stoi(nodes)];
                if (mn == 0 || got < mn) mn = got;
                if (got > mx) mx = got;
            }
        }
    }
    require_near(ranges[1].first, 1.73, 0.01, "single-node minimum speedup");
    require_near(ranges[1].second, 4.01, 0.01, "single-node maximum speedup");
    require_near(ranges[2].first, 1.05, 0.01, "two-node minimum speedup");
    require_near(ranges[2].second, 1.40, 0.01, "two-node maximum speedup");
}

// --- criterion 5: near-constant provisioning model ----------------------------

void criterion_provisioning_model() {
    SimulatedBackend backend{SimulatedConf{}};  // default latency model
    double lo = 1e300, hi = 0;
    for (int procs = 1; procs <= 1024; ++procs) {
        const int nodes = (procs + 63) / 64;  // 64-core instances
        const double t = backend.modeled_provision_s(nodes);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    require(hi / lo - 1.0 < 0.10, "provision model must vary < 10% from 1 to 1024 "
                                  "processes; got " +
                                      std::to_string((hi / lo - 1.0) * 100) + "%");
    require(hi < 900.0, "modeled provision time must stay under 900s");

    SimulatedBackend again{SimulatedConf{}};
    require(again.modeled_provision_s(16) == backend.modeled_provision_s(16),
            "provision model must be deterministic");
}

// --- criterion 6: regression detection ----------------------------------------

void criterion_regression_detection() {
    auto series_of = [](std::vector<double> values) {
        BuildSeries s;
        for (std::size_t i = 0; i < values.size(); ++i) {
            BuildEntry e;
            e.build_num = std::to_string(i + 1);
            e.commit_id = "c" + std::to_string(i + 1);
            e.table.build_num = e.build_num;
            e.table.rows.push_back({1, 10, 10, "elapsed", values[i]});
            s.builds.push_back(std::move(e));
        }
        return s;
    };

    // one injected step > 10%: exactly one flag, correct direction
    std::mt19937 rng(1234);
    for (int round = 0; round < 100; ++round) {
        const int len = std::uniform_int_distribution<int>(4, 10)(rng);
        const int at = std::uniform_int_distribution<int>(1, len - 1)(rng);
        const bool up = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
        double level = std::uniform_real_distribution<double>(50, 150)(rng);
        std::vector<double> values;
        for (int i = 0; i < len; ++i) {
            if (i == at) level *= up ? 1.35 : 0.65;
            values.push_back(level *
                             (1.0 + std::uniform_real_distribution<double>(-0.02,
                                                                           0.02)(rng)));
        }
        auto flags = detect_regressions(series_of(values), "elapsed", {1, 10}, 10.0);
        require(flags.size() == 1, "exactly one flag for one injected step");
        require(flags[0].improvement == !up, "flag direction must match the step");
        require(flags[0].to_build == std::to_string(at + 1),
                "flag must sit at the injected transition");
    }

    // shaped fixture: a large improvement between two adjacent builds is the
    // only flag at threshold 20%
    auto flags = detect_regressions(
        series_of({210, 195, 205, 200, 80, 85, 82}), "elapsed", {1, 10}, 20.0);
    require(flags.size() == 1, "only the big improvement may be flagged");
    require(flags[0].improvement, "the drop must read as an improvement");
    require(flags[0].from_build == "4" && flags[0].to_build == "5",
            "flag must name the adjacent builds");
    require(flags[0].from_commit == "c4" && flags[0].to_commit == "c5",
            "flag must carry the transition commits");
}

// --- criterion 7: publish safety ----------------------------------------------

void criterion_publish_safety() {
    TempDir dir;
    auto bare = dir / "remote.git";
    std::filesystem::create_directories(bare);
    git_in(bare, {"init", "-q", "--bare"});
    auto checkout = dir / "checkout";
    std::filesystem::create_directories(checkout);
    git_in(checkout, {"init", "-q"});
    git_in(checkout, {"-c", "user.name=d", "-c", "user.email=d@x", "commit", "-q",
                      "--allow-empty", "-m", "init"});

    const std::string sentinel = "tok-AAAA1111BBBB2222-secret";
    ResultTable table;
    table.build_num = "417";
    table.rows.push_back({1, 2, 2, "elapsed", 12.5});
    auto csv = write_result_csv(table, dir);
    require(csv.filename().string() == "scalability_test_result_417.csv",
            "result filename pattern");

    auto r = cli({"publish", csv.string(), "--checkout", checkout.string()},
                 {{"REPO_TOKEN", sentinel},
                  {"REPO_URL", bare.string()},
                  {"REPO_BRANCH", "results"},
                  {"BUILD_NUM", "417"}});
    require(r.exit_code == 0, "publish must exit 0, stderr: " + r.err);

    // raw commit object: message bytes start after the first blank line
    const std::string object = git_in(bare, {"cat-file", "commit", "results"});
    const auto blank = object.find("\n\n");
    require(blank != std::string::npos, "malformed commit object");
    require(object.substr(blank + 2) == "BeeSwarm commit 417 [skip ci]\n",
            "commit message must match byte for byte, got: " +
                object.substr(blank + 2));

    const std::string files = git_in(bare, {"ls-tree", "--name-only", "-r", "results"});
    require(files == "scalability-results/scalability_test_result_417.csv\n",
            "pushed path must match the filename contract");

    // the sentinel token must not appear in any log line or committed byte
    require(r.out.find(sentinel) == std::string::npos, "token leaked to stdout");
    require(r.err.find(sentinel) == std::string::npos, "token leaked to stderr");
    for (auto probe : {std::vector<std::string>{"log", "-p", "results"},
                       std::vector<std::string>{"ls-tree", "-r", "results"},
                       std::vector<std::string>{
                           "show",
                           "results:scalability-results/"
                           "scalability_test_result_417.csv"}})
        require(git_in(bare, probe).find(sentinel) == std::string::npos,
                "token leaked into the repository");
}

// --- criterion 8: CSV determinism ----------------------------------------------

void criterion_csv_determinism() {
    TempDir dir_a, dir_b;
    std::mt19937 rng(4242);
    std::uniform_int_distribution<int> dim(1, 64);
    std::uniform_int_distribution<int> metric_count(1, 3);
    std::uniform_int_distribution<int> point_count(1, 10);
    std::uniform_real_distribution<double> mantissa(-1e6, 1e6);
    std::uniform_int_distribution<int> exponent(-10, 10);
    const char* metrics[] = {"elapsed", "mem_mb", "bw"};

    for (int round = 0; round < 1000; ++round) {
        ResultTable t;
        t.build_num = std::to_string(round);
        std::set<std::tuple<int, int, std::string>> used;
        const int points = point_count(rng);
        const int n_metrics = metric_count(rng);
        for (int i = 0; i < points; ++i) {
            const int n = dim(rng), p = dim(rng);
            for (int m = 0; m < n_metrics; ++m) {
                if (!used.insert({n, p, metrics[m]}).second) continue;
                t.rows.push_back({n, p, static_cast<long long>(n) * p, metrics[m],
                                  mantissa(rng) * std::pow(10.0, exponent(rng))});
            }
        }
        const ResultTable canon = canonical(t);
        auto pa = write_result_csv(canon, dir_a);
        auto pb = write_result_csv(canon, dir_b);
        require(testutil::read_file(pa) == testutil::read_file(pb),
                "two writes of one table must be byte-identical");
        require(read_result_csv(pa) == canon, "parse(write(t)) must equal canonical(t)");
    }
}

struct Criterion {
    int number;
    const char* name;
    double budget_s;
    std::function<void()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "matrix expansion matches the brute-force oracle", 1.0,
         criterion_matrix_expansion},
        {2, "one provision and one teardown per job under faults", 30.0,
         criterion_single_provision},
        {3, "perfect-scaling pipeline reproduces p-fold speedups", 10.0,
         criterion_perfect_scaling},
        {4, "reported-curve fixture reproduces both speedup ranges", 10.0,
         criterion_reported_curve_fixture},
        {5, "provisioning model is near-constant up to 1024 processes", 5.0,
         criterion_provisioning_model},
        {6, "regression detection flags exactly the injected change", 10.0,
         criterion_regression_detection},
        {7, "publish emits the skip-ci commit and never leaks the token", 5.0,
         criterion_publish_safety},
        {8, "CSV writing is deterministic and round-trips", 10.0,
         criterion_csv_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (error.empty() && elapsed > c.budget_s)
            error = "over time budget (" + std::to_string(elapsed) + "s > " +
                    std::to_string(c.budget_s) + "s)";
        if (error.empty()) {
            std::printf("PASS  criterion %d: %s  [%.2fs < %.0fs]\n", c.number, c.name,
                        elapsed, c.budget_s);
        } else {
            std::printf("FAIL  criterion %d: %s  [%.2fs]\n      %s\n", c.number,
                        c.name, elapsed, error.c_str());
            ++failures;
        }
    }
    if (failures) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
