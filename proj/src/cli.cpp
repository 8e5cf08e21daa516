#include "swarmci/cli.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "swarmci/backend_registry.hpp"
#include "swarmci/ci_env.hpp"
#include "swarmci/config.hpp"
#include "swarmci/executor.hpp"
#include "swarmci/planner.hpp"
#include "swarmci/publisher.hpp"
#include "swarmci/results.hpp"

namespace swarmci {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Redactor {
    std::vector<std::string> secrets;
    std::string operator()(const std::string& text) const {
        return redact(text, secrets);
    }
};

std::vector<std::string> split_command(const std::string& cmd) {
    std::vector<std::string> parts;
    std::istringstream in(cmd);
    std::string token;
    while (in >> token) parts.push_back(token);
    return parts;
}

json point_json(const ScalePoint& p) {
    return json{{"nodes", p.nodes},
                {"procs_per_node", p.procs_per_node},
                {"total_procs", p.total_procs()}};
}

json matrix_json(const TaskSpec& spec, const RunMatrix& matrix) {
    json points = json::array();
    for (const auto& p : matrix.points) points.push_back(point_json(p));
    return json{{"task_name", spec.task_name},
                {"exec_target", spec.exec_target},
                {"points", points},
                {"count", matrix.points.size()},
                {"max_nodes", matrix.max_nodes}};
}

void print_matrix_table(std::ostream& out, const TaskSpec& spec,
                        const RunMatrix& matrix) {
    out << "run matrix for " << spec.task_name << ": " << matrix.points.size()
        << " points, max nodes " << matrix.max_nodes << "\n";
    out << "  nodes  procs_per_node  total_procs\n";
    char line[64];
    for (const auto& p : matrix.points) {
        std::snprintf(line, sizeof line, "  %5d  %14d  %11lld\n", p.nodes,
                      p.procs_per_node, p.total_procs());
        out << line;
    }
}

void print_warnings(std::ostream& out, const TaskSpec& spec) {
    for (const auto& w : spec.warnings)
        out << "note: " << w.json_path << ": " << w.message << "\n";
}

// Re-parses the beefile with exec_target patched, so the conf block for the
// substituted backend gets picked up and validated the normal way.
TaskSpec load_spec(const std::filesystem::path& beefile,
                   const std::string& backend_override) {
    if (backend_override.empty())
        return parse_taskspec_file(beefile);
    std::ifstream in(beefile, std::ios::binary);
    if (!in)
        throw MalformedJson("cannot read beefile: " + beefile.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw MalformedJson(std::string("beefile is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("task_conf") ||
        !doc.at("task_conf").is_object())
        throw SchemaViolation("missing required object $.task_conf");
    doc["task_conf"]["exec_target"] = backend_override;
    return parse_taskspec(doc.dump());
}

int report_findings(std::ostream& err, const std::vector<ValidationFinding>& findings,
                    const Redactor& red) {
    for (const auto& f : findings)
        err << "config: " << f.json_path << ": " << red(f.message) << "\n";
    err << "error: backend configuration rejected (" << findings.size()
        << (findings.size() == 1 ? " finding)" : " findings)") << "\n";
    return 2;
}

struct PlanArgs {
    std::string beefile;
    std::size_t max_points = kDefaultMatrixCap;
};

struct RunArgs {
    std::string beefile;
    std::string backend_override;
    double timeout_min = 120;
    double point_timeout_s = 0;
    bool publish = false;
    bool fail_fast = false;
    std::string parser_cmd;
    std::string output_root = "outputs";
    std::string result_dir = ".";
    std::string checkout_dir = ".";
    std::string results_subdir = "scalability-results";
    std::size_t max_points = kDefaultMatrixCap;
};

struct AnalyzeArgs {
    std::string results_dir;
    std::string metric = "elapsed";
    double threshold_pct = 10.0;
    std::string point_label;
    std::string baseline_label;
    bool as_json = false;
};

struct PublishArgs {
    std::string file;
    std::string checkout_dir = ".";
    std::string results_subdir = "scalability-results";
};

struct ParseArgs {
    std::string output_dir;
};

PublishTarget target_from_env(const CiEnvironment& ci, const std::string& checkout,
                              const std::string& results_subdir) {
    PublishTarget target;
    target.repo_url = ci.repo_url.value_or("");
    target.branch = ci.repo_branch.value_or("");
    target.token = ci.repo_token.value_or("");
    target.build_num = ci.build_num;
    target.checkout_dir = checkout;
    target.results_subdir = results_subdir;
    return target;
}

int cmd_plan(const PlanArgs& a, std::ostream& out, const Redactor& red) {
    TaskSpec spec = parse_taskspec_file(a.beefile);
    print_warnings(out, spec);
    for (const auto& f : validate_backend_conf(spec))
        out << "warning: " << f.json_path << ": " << red(f.message) << "\n";
    RunMatrix matrix = expand_matrix(spec.scalability, a.max_points);
    print_matrix_table(out, spec, matrix);
    out << matrix_json(spec, matrix).dump(2) << "\n";
    return 0;
}

int cmd_run(const RunArgs& a, const CiEnvironment& ci, const CliServices& services,
            std::ostream& out, std::ostream& err, const Redactor& red) {
    auto t0 = Clock::now();

    TaskSpec spec = load_spec(a.beefile, a.backend_override);
    print_warnings(out, spec);

    // Publishing preconditions come first: a missing token must be caught
    // before any provisioning cost is incurred.
    if (a.publish) require_publishable(ci);

    auto findings = validate_backend_conf(spec);
    if (!findings.empty())
        return report_findings(err, findings, red);

    RunMatrix matrix = expand_matrix(spec.scalability, a.max_points);
    out << "planned " << matrix.points.size() << " scale points, max nodes "
        << matrix.max_nodes << " (" << spec.exec_target << " backend)\n";

    auto backend = services.backend_factory
                       ? services.backend_factory(spec.exec_target, spec.backend_conf,
                                                  spec.image_ref)
                       : make_backend(spec.exec_target, spec.backend_conf,
                                      spec.image_ref);

    JobOptions opts;
    opts.job_timeout_s = a.timeout_min * 60.0;
    opts.point_timeout_s = a.point_timeout_s;
    opts.policy = a.fail_fast ? PointFailurePolicy::fail_fast
                              : PointFailurePolicy::keep_going;
    opts.output_root = a.output_root;
    opts.install_s_baseline = seconds_since(t0);

    JobOutcome outcome = run_job(spec, matrix, *backend, opts);

    for (const auto& rec : outcome.records) {
        out << "point " << point_label(rec.point) << ": ";
        if (rec.result.timed_out)
            out << "timed out after " << rec.result.wall_time_s << "s\n";
        else if (rec.result.exit_code != 0)
            out << "failed (exit " << rec.result.exit_code << ")\n";
        else
            out << "ok (" << rec.result.wall_time_s << "s)\n";
    }
    if (outcome.job_timed_out)
        err << "job timeout reached after " << outcome.records.size() << " of "
            << matrix.points.size() << " points\n";
    if (outcome.fail_fast_stop)
        err << "stopped at first failure (--fail-fast)\n";
    if (!outcome.teardown_unreachable.empty()) {
        err << "teardown incomplete on:";
        for (const auto& h : outcome.teardown_unreachable) err << " " << h;
        err << "\n";
    }

    auto t_collect = Clock::now();
    ResultTable table =
        a.parser_cmd.empty()
            ? builtin_kv_parse(outcome.output_dir, ci.build_num)
            : invoke_parser(split_command(a.parser_cmd), outcome.output_dir,
                            ci.build_num);
    auto csv_path = write_result_csv(table, a.result_dir);
    outcome.timings.collect_s = seconds_since(t_collect);
    out << "wrote " << csv_path.string() << " (" << table.rows.size() << " rows)\n";

    if (a.publish) {
        auto t_publish = Clock::now();
        auto target = target_from_env(ci, a.checkout_dir, a.results_subdir);
        std::string commit = publish_result(csv_path, target);
        outcome.timings.publish_s = seconds_since(t_publish);
        out << "published as commit " << red(commit) << " on branch " << target.branch
            << "\n";
    }

    write_stage_report(outcome.timings, outcome.output_dir);
    out << render_stage_report(outcome.timings).table_text;

    if (!outcome.all_points_ok()) {
        err << "job finished with failures\n";
        return 1;
    }
    return 0;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
    BuildSeries series = load_build_series(a.results_dir);
    if (series.builds.empty())
        throw ConfigError("no scalability_test_result_<BUILD_NUM>.csv files in " +
                          a.results_dir);

    const BuildEntry& latest = series.builds.back();
    std::optional<ScalePoint> baseline;
    if (!a.baseline_label.empty()) baseline = parse_point_label(a.baseline_label);

    auto speedups = speedup_by_node_count(latest.table, a.metric, baseline);

    out << "speedup for build " << latest.build_num << ", metric \"" << a.metric
        << "\" (baseline: smallest total_procs per node count)\n";
    char line[96];
    for (const auto& [nodes, entries] : speedups) {
        out << "  " << nodes << (nodes == 1 ? " node:\n" : " nodes:\n");
        for (const auto& e : entries) {
            std::snprintf(line, sizeof line, "    %-8s total_procs=%-6lld %.3fx\n",
                          point_label(e.point).c_str(), e.point.total_procs(),
                          e.speedup);
            out << line;
        }
    }

    json regression_json = json::array();
    if (series.builds.size() < 2) {
        out << "regression check skipped: need at least 2 builds, have "
            << series.builds.size() << "\n";
    } else {
        std::vector<ScalePoint> points;
        if (!a.point_label.empty())
            points.push_back(parse_point_label(a.point_label));
        else
            points = series_points(series, a.metric);

        std::size_t flag_count = 0;
        for (const auto& point : points) {
            auto flags = detect_regressions(series, a.metric, point, a.threshold_pct);
            for (const auto& f : flags) {
                ++flag_count;
                out << "  " << (f.improvement ? "improvement" : "degradation")
                    << " at " << point_label(f.point) << ": build " << f.from_build
                    << " -> " << f.to_build;
                if (!f.from_commit.empty() || !f.to_commit.empty())
                    out << " (" << f.from_commit << " -> " << f.to_commit << ")";
                std::snprintf(line, sizeof line, ", %s %g -> %g (%.1f%%)\n",
                              f.metric.c_str(), f.prev_value, f.new_value,
                              f.change_pct);
                out << line;
                regression_json.push_back(
                    {{"from_build", f.from_build},
                     {"to_build", f.to_build},
                     {"from_commit", f.from_commit},
                     {"to_commit", f.to_commit},
                     {"point", point_json(f.point)},
                     {"metric", f.metric},
                     {"prev_value", f.prev_value},
                     {"new_value", f.new_value},
                     {"change_pct", f.change_pct},
                     {"improvement", f.improvement}});
            }
        }
        if (flag_count == 0)
            out << "no transitions above " << a.threshold_pct << "% (threshold) across "
                << series.builds.size() << " builds\n";
        else
            err << flag_count << " flagged transition"
                << (flag_count == 1 ? "" : "s") << " above " << a.threshold_pct
                << "%\n";
    }

    if (a.as_json) {
        json speedup_json = json::object();
        for (const auto& [nodes, entries] : speedups) {
            json arr = json::array();
            for (const auto& e : entries) {
                json p = point_json(e.point);
                p["speedup"] = e.speedup;
                arr.push_back(p);
            }
            speedup_json[std::to_string(nodes)] = arr;
        }
        json doc{{"build", latest.build_num},
                 {"metric", a.metric},
                 {"threshold_pct", a.threshold_pct},
                 {"speedup", speedup_json},
                 {"regressions", regression_json}};
        out << doc.dump(2) << "\n";
    }
    return 0;
}

int cmd_publish(const PublishArgs& a, const CiEnvironment& ci, std::ostream& out,
                const Redactor& red) {
    require_publishable(ci);
    auto target = target_from_env(ci, a.checkout_dir, a.results_subdir);
    std::string commit = publish_result(a.file, target);
    out << "published " << std::filesystem::path(a.file).filename().string()
        << " as commit " << red(commit) << " on branch " << target.branch << "\n";
    return 0;
}

int cmd_parse(const ParseArgs& a, std::ostream& out) {
    out << render_csv(builtin_kv_parse(a.output_dir));
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, const CliServices& services) {
    CLI::App app{"scalability tests for CI: expand a scaling config, run it on a "
                 "compute backend, aggregate results, push them back"};
    app.name("swarmci");
    app.require_subcommand(1);

    PlanArgs plan_args;
    auto* plan = app.add_subcommand("plan", "expand the run matrix (no side effects)");
    plan->add_option("beefile", plan_args.beefile, "task description file")->required();
    plan->add_option("--max-points", plan_args.max_points, "matrix size cap");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run the full scalability test job");
    run->add_option("beefile", run_args.beefile, "task description file")->required();
    run->add_option("--backend", run_args.backend_override,
                    "override exec_target (simulated, ssh-cluster)");
    run->add_option("--timeout", run_args.timeout_min, "job timeout in minutes");
    run->add_option("--point-timeout", run_args.point_timeout_s,
                    "per-point timeout in seconds (default: timeout / points)");
    run->add_flag("--publish", run_args.publish, "push the result CSV back");
    run->add_flag("--fail-fast", run_args.fail_fast, "stop at the first failing point");
    run->add_option("--parser", run_args.parser_cmd,
                    "output parser command (default: built-in key=value parser)");
    run->add_option("--output-root", run_args.output_root, "run output directory root");
    run->add_option("--result-dir", run_args.result_dir, "where the result CSV goes");
    run->add_option("--checkout", run_args.checkout_dir, "CI checkout to publish from");
    run->add_option("--results-subdir", run_args.results_subdir,
                    "result directory inside the repository");
    run->add_option("--max-points", run_args.max_points, "matrix size cap");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand(
        "analyze", "speedup and cross-build regressions from stored CSVs");
    analyze->add_option("results-dir", analyze_args.results_dir, "CSV directory")
        ->required();
    analyze->add_option("--metric", analyze_args.metric, "metric name");
    analyze->add_option("--threshold", analyze_args.threshold_pct,
                        "regression threshold in percent");
    analyze->add_option("--point", analyze_args.point_label,
                        "restrict regression check to one NxP point");
    analyze->add_option("--baseline", analyze_args.baseline_label,
                        "speedup baseline point NxP");
    analyze->add_flag("--json", analyze_args.as_json, "also print a JSON report");

    PublishArgs publish_args;
    auto* publish = app.add_subcommand("publish", "push a result file back");
    publish->add_option("file", publish_args.file, "result CSV")->required();
    publish->add_option("--checkout", publish_args.checkout_dir,
                        "CI checkout to publish from");
    publish->add_option("--results-subdir", publish_args.results_subdir,
                        "result directory inside the repository");

    ParseArgs parse_args;
    auto* parse =
        app.add_subcommand("parse", "built-in key=value output parser (CSV on stdout)");
    parse->add_option("output-dir", parse_args.output_dir, "run output directory")
        ->required();

    std::vector<const char*> argv;
    argv.push_back("swarmci");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    const auto env = services.use_process_env ? process_ci_env() : services.env;
    const CiEnvironment ci = load_ci_environment(env);
    const Redactor red{ci.secrets()};

    try {
        if (*plan) return cmd_plan(plan_args, out, red);
        if (*run) return cmd_run(run_args, ci, services, out, err, red);
        if (*analyze) return cmd_analyze(analyze_args, out, err);
        if (*publish) return cmd_publish(publish_args, ci, out, red);
        if (*parse) return cmd_parse(parse_args, out);
    } catch (const ConfigError& e) {
        err << "error: " << red(e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << red(e.what()) << "\n";
        return 1;
    }
    return 2;
}

}  // namespace swarmci
