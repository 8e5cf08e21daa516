#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmci/backend.hpp"
#include "swarmci/config.hpp"
#include "swarmci/planner.hpp"

namespace swarmci {

struct RunRecord {
    ScalePoint point;
    LaunchResult result;
    std::chrono::system_clock::time_point started_at;
};

struct StageTimings {
    double install_s = 0;
    double provision_s = 0;  // equals Allocation.provision_wall_time
    double execute_s = 0;
    double collect_s = 0;
    double publish_s = 0;

    double total_s() const {
        return install_s + provision_s + execute_s + collect_s + publish_s;
    }
};

enum class PointFailurePolicy { keep_going, fail_fast };

struct CancelToken {
    std::atomic<bool> cancelled{false};
};

struct JobOptions {
    double job_timeout_s = 120.0 * 60.0;  // CI wrapper default
    double point_timeout_s = 0;           // 0 -> job_timeout / |matrix|
    PointFailurePolicy policy = PointFailurePolicy::keep_going;
    std::filesystem::path output_root = "outputs";
    double install_s_baseline = 0;  // caller time spent before run_job
    const CancelToken* cancel = nullptr;
};

struct JobOutcome {
    std::vector<RunRecord> records;  // matrix order; a prefix when truncated
    StageTimings timings;
    bool job_timed_out = false;
    bool cancelled = false;
    bool fail_fast_stop = false;
    std::vector<std::string> teardown_unreachable;  // nonempty on partial teardown
    std::filesystem::path output_dir;               // outputs/<task_name>

    bool all_points_ok() const;
};

// Provision once at required_nodes, run every point sequentially in matrix
// order, capture per-point output to <output_root>/<task_name>/<N>x<P>.out,
// always tear down. Throws ProvisionFailure when provisioning fails (then no
// teardown happens and no points run); a global deadline truncates the
// record list instead of throwing.
JobOutcome run_job(const TaskSpec& spec, const RunMatrix& matrix,
                   Backend& backend, const JobOptions& opts = {});

struct StageReport {
    std::string table_text;
    nlohmann::json json;
};

// Log table plus machine-readable block; stage percentages sum to 100.
StageReport render_stage_report(const StageTimings& timings);

// Writes the JSON block to <dir>/stages.json and returns the path.
std::filesystem::path write_stage_report(const StageTimings& timings,
                                         const std::filesystem::path& dir);

}  // namespace swarmci
