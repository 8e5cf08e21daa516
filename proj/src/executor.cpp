#include "swarmci/executor.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace swarmci {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Executes one point `repeats` times and keeps the lower-median attempt, so
// the parser sees exactly one output file per scale point.
LaunchResult launch_with_repeats(Backend& backend, const Allocation& alloc,
                                 const TaskSpec& spec, const ScalePoint& point,
                                 double timeout_s,
                                 const std::filesystem::path& final_sink) {
    const int repeats = std::max(1, spec.scalability.repeats);
    if (repeats == 1) {
        LaunchRequest req{point, spec.scalability.script, timeout_s,
                          Backend::scale_env(point), final_sink};
        return backend.launch(alloc, req);
    }

    struct Attempt {
        LaunchResult result;
        std::filesystem::path sink;
    };
    std::vector<Attempt> attempts;
    attempts.reserve(static_cast<std::size_t>(repeats));
    for (int k = 0; k < repeats; ++k) {
        auto sink = final_sink;
        sink += ".rep" + std::to_string(k);
        LaunchRequest req{point, spec.scalability.script, timeout_s,
                          Backend::scale_env(point), sink};
        attempts.push_back({backend.launch(alloc, req), sink});
    }

    std::stable_sort(attempts.begin(), attempts.end(),
                     [](const Attempt& a, const Attempt& b) {
                         return a.result.wall_time_s < b.result.wall_time_s;
                     });
    std::size_t median = static_cast<std::size_t>((repeats - 1) / 2);

    std::error_code ec;
    std::filesystem::rename(attempts[median].sink, final_sink, ec);
    if (ec) {
        std::filesystem::copy_file(attempts[median].sink, final_sink,
                                   std::filesystem::copy_options::overwrite_existing);
        std::filesystem::remove(attempts[median].sink, ec);
    }
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        if (i == median) continue;
        std::filesystem::remove(attempts[i].sink, ec);
    }

    LaunchResult chosen = attempts[median].result;
    chosen.output_path = final_sink;
    return chosen;
}

}  // namespace

bool JobOutcome::all_points_ok() const {
    if (job_timed_out || cancelled || fail_fast_stop) return false;
    for (const auto& r : records)
        if (!r.result.ok()) return false;
    return !records.empty();
}

JobOutcome run_job(const TaskSpec& spec, const RunMatrix& matrix, Backend& backend,
                   const JobOptions& opts) {
    if (matrix.points.empty())
        throw EmptyMatrix("run matrix has no points");
    if (opts.job_timeout_s <= 0)
        throw ConfigError("job timeout must be positive");

    auto t0 = Clock::now();
    JobOutcome out;
    out.output_dir = opts.output_root / spec.task_name;
    std::error_code ec;
    std::filesystem::create_directories(out.output_dir, ec);
    if (ec)
        throw IoFailure("cannot create output directory " + out.output_dir.string() +
                        ": " + ec.message());

    const double point_timeout =
        opts.point_timeout_s > 0
            ? opts.point_timeout_s
            : opts.job_timeout_s / static_cast<double>(matrix.points.size());

    out.timings.install_s = opts.install_s_baseline + seconds_since(t0);

    Allocation alloc;
    try {
        alloc = backend.provision(required_nodes(matrix));
    } catch (const std::exception& e) {
        throw ProvisionFailure(std::string("provisioning failed: ") + e.what());
    }
    out.timings.provision_s = alloc.provision_wall_time_s;

    // Teardown happens exactly once, on every path out of the loop below.
    bool torn_down = false;
    auto teardown_once = [&]() noexcept {
        if (torn_down) return;
        torn_down = true;
        try {
            backend.teardown(alloc);
        } catch (const TeardownPartial& e) {
            out.teardown_unreachable = e.unreachable_hosts();
        } catch (const std::exception&) {
        }
    };

    try {
        for (const auto& point : matrix.points) {
            if (opts.cancel && opts.cancel->cancelled.load()) {
                out.cancelled = true;
                break;
            }
            const double accounted = out.timings.install_s + out.timings.provision_s +
                                     out.timings.execute_s;
            const double budget = opts.job_timeout_s - accounted;
            if (budget <= 0) {
                out.job_timed_out = true;
                break;
            }

            RunRecord rec;
            rec.point = point;
            rec.started_at = std::chrono::system_clock::now();
            auto sink = out.output_dir / (point_label(point) + ".out");
            rec.result = launch_with_repeats(backend, alloc, spec, point,
                                             std::min(point_timeout, budget), sink);
            out.timings.execute_s += rec.result.wall_time_s;
            const bool failed = !rec.result.ok();
            out.records.push_back(std::move(rec));

            if (failed && opts.policy == PointFailurePolicy::fail_fast) {
                out.fail_fast_stop = true;
                break;
            }
        }
    } catch (...) {
        teardown_once();
        throw;
    }
    teardown_once();
    return out;
}

StageReport render_stage_report(const StageTimings& t) {
    const double total = t.total_s();
    const struct {
        const char* name;
        double seconds;
    } stages[] = {
        {"install", t.install_s}, {"provision", t.provision_s},
        {"execute", t.execute_s}, {"collect", t.collect_s},
        {"publish", t.publish_s},
    };

    StageReport report;
    report.json["total_s"] = total;
    nlohmann::json percent = nlohmann::json::object();

    std::string text = "stage        seconds      share\n";
    for (const auto& s : stages) {
        const double pct = total > 0 ? s.seconds / total * 100.0 : 0.0;
        char line[96];
        std::snprintf(line, sizeof line, "%-10s %10.3f   %6.1f%%\n", s.name, s.seconds,
                      pct);
        text += line;
        report.json[std::string(s.name) + "_s"] = s.seconds;
        percent[s.name] = pct;
    }
    char totline[96];
    std::snprintf(totline, sizeof totline, "%-10s %10.3f   %6.1f%%\n", "total", total,
                  total > 0 ? 100.0 : 0.0);
    text += totline;

    report.table_text = std::move(text);
    report.json["percent"] = std::move(percent);
    return report;
}

std::filesystem::path write_stage_report(const StageTimings& timings,
                                         const std::filesystem::path& dir) {
    auto path = dir / "stages.json";
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoFailure("cannot write " + path.string());
    out << render_stage_report(timings).json.dump(2) << "\n";
    return path;
}

}  // namespace swarmci
