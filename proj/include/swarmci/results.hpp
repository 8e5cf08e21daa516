#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmci/errors.hpp"
#include "swarmci/planner.hpp"

namespace swarmci {

struct MetricRow {
    int nodes = 0;
    int procs_per_node = 0;
    long long total_procs = 0;
    std::string metric_name;
    double metric_value = 0;

    bool operator==(const MetricRow&) const = default;
};

struct ResultTable {
    std::string build_num;
    std::vector<MetricRow> rows;

    bool operator==(const ResultTable&) const = default;
};

struct BuildEntry {
    std::string build_num;
    std::string commit_id;  // may be empty when discovered from files
    ResultTable table;
};

struct BuildSeries {
    std::vector<BuildEntry> builds;  // build order strictly increasing
};

inline constexpr const char* kCsvHeader = "nodes,procs_per_node,total_procs,metric,value";

// Rows sorted by (total_procs, nodes, metric_name); duplicate
// (nodes, procs_per_node, metric) keys or inconsistent totals throw
// SchemaViolation.
ResultTable canonical(ResultTable table);

std::string result_filename(const std::string& build_num);
std::optional<std::string> build_num_from_filename(const std::string& filename);

// Canonical CSV text: header, sorted rows, LF endings, '.' decimals,
// shortest round-trip value formatting, no trailing whitespace.
std::string render_csv(const ResultTable& table);

ResultTable parse_csv_text(const std::string& text, const std::string& build_num);

// Writes scalability_test_result_<build_num>.csv into dest_dir, bit-exact
// and deterministic. Returns the written path.
std::filesystem::path write_result_csv(const ResultTable& table,
                                       const std::filesystem::path& dest_dir);

ResultTable read_result_csv(const std::filesystem::path& file);

// Built-in default parser: every "key=value" line with a numeric value in
// each <N>x<P>.out file becomes one metric row for that scale point.
// '#'-prefixed lines are comments.
ResultTable builtin_kv_parse(const std::filesystem::path& output_dir,
                             const std::string& build_num = "");

// Developer-parser handshake: parser_cmd gets output_dir appended as its
// final argument and must print schema CSV on stdout, exit 0.
ResultTable invoke_parser(const std::vector<std::string>& parser_cmd,
                          const std::filesystem::path& output_dir,
                          const std::string& build_num = "");

struct SpeedupEntry {
    ScalePoint point;
    double speedup = 0;
};

// speedup(point) = value(baseline) / value(point) for a time-like metric;
// the baseline entry is exactly 1.0.
std::vector<SpeedupEntry> compute_speedup(const ResultTable& table,
                                          const std::string& metric,
                                          const ScalePoint& baseline);

// Default baseline rule: within each node-count group, the smallest
// total_procs point. baseline_override applies to its own node group.
std::map<int, std::vector<SpeedupEntry>> speedup_by_node_count(
    const ResultTable& table, const std::string& metric,
    std::optional<ScalePoint> baseline_override = std::nullopt);

struct RegressionFlag {
    std::string from_build;
    std::string to_build;
    std::string from_commit;
    std::string to_commit;
    ScalePoint point;
    std::string metric;
    double prev_value = 0;
    double new_value = 0;
    double change_pct = 0;    // |delta| / previous * 100
    bool improvement = false; // lower is better for time-like metrics
};

// Flags every consecutive build pair where |delta|/previous exceeds
// threshold_pct percent. Throws InsufficientHistory when fewer than two
// builds carry (metric, point).
std::vector<RegressionFlag> detect_regressions(const BuildSeries& series,
                                               const std::string& metric,
                                               const ScalePoint& point,
                                               double threshold_pct);

// Scans dir for scalability_test_result_<BUILD_NUM>.csv files; numeric
// build numbers sort numerically.
BuildSeries load_build_series(const std::filesystem::path& results_dir);

// All points that appear in at least min_builds builds of the series.
std::vector<ScalePoint> series_points(const BuildSeries& series,
                                      const std::string& metric,
                                      std::size_t min_builds = 2);

}  // namespace swarmci
