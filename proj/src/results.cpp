#include "swarmci/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "swarmci/subprocess.hpp"

namespace swarmci {

namespace {

constexpr double kParserTimeoutS = 600.0;

std::string format_value(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        throw IoFailure("cannot format metric value");
    return std::string(buf, ptr);
}

bool parse_full_int(const std::string& s, long long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_full_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

bool row_less(const MetricRow& a, const MetricRow& b) {
    if (a.total_procs != b.total_procs) return a.total_procs < b.total_procs;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    return a.metric_name < b.metric_name;
}

void check_row(const MetricRow& r) {
    if (r.nodes < 1 || r.procs_per_node < 1)
        throw SchemaViolation("metric row has non-positive node/proc counts");
    if (r.total_procs != static_cast<long long>(r.nodes) * r.procs_per_node)
        throw SchemaViolation("metric row total_procs != nodes * procs_per_node");
    if (r.metric_name.empty() ||
        r.metric_name.find_first_of(",\n\r") != std::string::npos)
        throw SchemaViolation("metric name is empty or contains separators");
}

// Numeric build numbers compare numerically, everything else by name.
bool build_less(const std::string& a, const std::string& b) {
    long long na = 0, nb = 0;
    const bool a_num = parse_full_int(a, na);
    const bool b_num = parse_full_int(b, nb);
    if (a_num != b_num) return a_num;  // numeric builds first
    if (a_num) return na != nb ? na < nb : a < b;
    return a < b;
}

}  // namespace

ResultTable canonical(ResultTable table) {
    for (const auto& r : table.rows) check_row(r);
    std::sort(table.rows.begin(), table.rows.end(), row_less);
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const auto& a = table.rows[i - 1];
        const auto& b = table.rows[i];
        if (a.nodes == b.nodes && a.procs_per_node == b.procs_per_node &&
            a.metric_name == b.metric_name)
            throw SchemaViolation("duplicate metric row " + point_label({a.nodes,
                                  a.procs_per_node}) + "/" + a.metric_name);
    }
    return table;
}

std::string result_filename(const std::string& build_num) {
    if (build_num.empty())
        throw IoFailure("build number must not be empty");
    return "scalability_test_result_" + build_num + ".csv";
}

std::optional<std::string> build_num_from_filename(const std::string& filename) {
    static const std::regex pattern(R"(^scalability_test_result_(.+)\.csv$)");
    std::smatch m;
    if (!std::regex_match(filename, m, pattern)) return std::nullopt;
    return m[1].str();
}

std::string render_csv(const ResultTable& table) {
    ResultTable t = canonical(table);
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : t.rows) {
        out += std::to_string(r.nodes) + "," + std::to_string(r.procs_per_node) + "," +
               std::to_string(r.total_procs) + "," + r.metric_name + "," +
               format_value(r.metric_value) + "\n";
    }
    return out;
}

ResultTable parse_csv_text(const std::string& text, const std::string& build_num) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    if (lines.empty() || lines[0] != kCsvHeader)
        throw ParserOutputMalformed("CSV header must be exactly \"" +
                                    std::string(kCsvHeader) + "\"");

    ResultTable table;
    table.build_num = build_num;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 5)
            throw ParserOutputMalformed("line " + std::to_string(i + 1) + " has " +
                                        std::to_string(fields.size()) +
                                        " fields, expected 5");
        long long nodes = 0, ppn = 0, total = 0;
        double value = 0;
        if (!parse_full_int(fields[0], nodes) || !parse_full_int(fields[1], ppn) ||
            !parse_full_int(fields[2], total) || !parse_full_double(fields[4], value))
            throw ParserOutputMalformed("line " + std::to_string(i + 1) +
                                        " has non-numeric fields");
        MetricRow row{static_cast<int>(nodes), static_cast<int>(ppn), total, fields[3],
                      value};
        table.rows.push_back(std::move(row));
    }
    try {
        return canonical(std::move(table));
    } catch (const SchemaViolation& e) {
        throw ParserOutputMalformed(e.what());
    }
}

std::filesystem::path write_result_csv(const ResultTable& table,
                                       const std::filesystem::path& dest_dir) {
    std::error_code ec;
    std::filesystem::create_directories(dest_dir, ec);
    auto path = dest_dir / result_filename(table.build_num);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoFailure("cannot write " + path.string());
    out << render_csv(table);
    out.flush();
    if (!out)
        throw IoFailure("short write to " + path.string());
    return path;
}

ResultTable read_result_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw IoFailure("cannot read " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto build = build_num_from_filename(file.filename().string());
    try {
        return parse_csv_text(buf.str(), build.value_or(""));
    } catch (const ParserOutputMalformed& e) {
        throw SchemaViolation(file.string() + ": " + e.what());
    }
}

ResultTable builtin_kv_parse(const std::filesystem::path& output_dir,
                             const std::string& build_num) {
    if (!std::filesystem::is_directory(output_dir))
        throw EmptyOutputDir("output directory not found: " + output_dir.string());

    static const std::regex out_name(R"(^(\d+)x(\d+)\.out$)");
    static const std::regex kv_line(R"(^\s*([A-Za-z_][A-Za-z0-9_.:-]*)\s*=\s*(\S+)\s*$)");

    std::size_t run_files = 0;
    ResultTable table;
    table.build_num = build_num;

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(output_dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        const std::string name = path.filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, out_name)) continue;
        ++run_files;
        ScalePoint point{std::stoi(m[1].str()), std::stoi(m[2].str())};

        std::ifstream in(path, std::ios::binary);
        std::string line;
        std::map<std::string, double> metrics;  // last occurrence wins
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::smatch kv;
            if (!std::regex_match(line, kv, kv_line)) continue;
            double value = 0;
            if (!parse_full_double(kv[2].str(), value)) continue;
            metrics[kv[1].str()] = value;
        }
        for (const auto& [metric, value] : metrics)
            table.rows.push_back({point.nodes, point.procs_per_node,
                                  point.total_procs(), metric, value});
    }

    if (run_files == 0)
        throw EmptyOutputDir("no run output files (<nodes>x<ppn>.out) in " +
                             output_dir.string());
    return canonical(std::move(table));
}

ResultTable invoke_parser(const std::vector<std::string>& parser_cmd,
                          const std::filesystem::path& output_dir,
                          const std::string& build_num) {
    if (parser_cmd.empty())
        throw ParserFailure("parser command is empty", "");
    if (!std::filesystem::is_directory(output_dir))
        throw EmptyOutputDir("output directory not found: " + output_dir.string());
    bool any_file = false;
    for (const auto& entry : std::filesystem::directory_iterator(output_dir))
        any_file |= entry.is_regular_file();
    if (!any_file)
        throw EmptyOutputDir("no run output files in " + output_dir.string());

    CommandSpec spec;
    spec.argv = parser_cmd;
    spec.argv.push_back(output_dir.string());
    spec.timeout_s = kParserTimeoutS;
    CommandResult r = run_command(spec);
    if (r.timed_out)
        throw ParserFailure("output parser timed out", r.err);
    if (r.exit_code != 0)
        throw ParserFailure("output parser exited " + std::to_string(r.exit_code),
                            r.err);
    ResultTable table = parse_csv_text(r.out, build_num);
    return table;
}

std::vector<SpeedupEntry> compute_speedup(const ResultTable& table,
                                          const std::string& metric,
                                          const ScalePoint& baseline) {
    std::vector<std::pair<ScalePoint, double>> values;
    for (const auto& r : table.rows)
        if (r.metric_name == metric)
            values.push_back({{r.nodes, r.procs_per_node}, r.metric_value});
    if (values.empty())
        throw MissingMetric("metric \"" + metric + "\" not present in build " +
                            (table.build_num.empty() ? "?" : table.build_num));

    const double* base = nullptr;
    for (const auto& [p, v] : values)
        if (p == baseline) base = &v;
    if (!base)
        throw MissingBaseline("baseline point " + point_label(baseline) +
                              " has no \"" + metric + "\" value");
    for (const auto& [p, v] : values)
        if (v <= 0)
            throw NonpositiveValue("metric \"" + metric + "\" at " + point_label(p) +
                                   " is not positive; speedup is undefined");

    std::vector<SpeedupEntry> out;
    out.reserve(values.size());
    for (const auto& [p, v] : values)
        out.push_back({p, *base / v});
    std::sort(out.begin(), out.end(), [](const SpeedupEntry& a, const SpeedupEntry& b) {
        return scale_point_less(a.point, b.point);
    });
    return out;
}

std::map<int, std::vector<SpeedupEntry>> speedup_by_node_count(
    const ResultTable& table, const std::string& metric,
    std::optional<ScalePoint> baseline_override) {
    std::map<int, std::vector<MetricRow>> groups;
    for (const auto& r : table.rows)
        if (r.metric_name == metric) groups[r.nodes].push_back(r);
    if (groups.empty())
        throw MissingMetric("metric \"" + metric + "\" not present in build " +
                            (table.build_num.empty() ? "?" : table.build_num));

    std::map<int, std::vector<SpeedupEntry>> out;
    for (auto& [nodes, rows] : groups) {
        ScalePoint baseline{rows.front().nodes, rows.front().procs_per_node};
        for (const auto& r : rows) {
            ScalePoint p{r.nodes, r.procs_per_node};
            if (scale_point_less(p, baseline)) baseline = p;
        }
        if (baseline_override && baseline_override->nodes == nodes)
            baseline = *baseline_override;
        ResultTable group{table.build_num, rows};
        out[nodes] = compute_speedup(group, metric, baseline);
    }
    return out;
}

std::vector<RegressionFlag> detect_regressions(const BuildSeries& series,
                                               const std::string& metric,
                                               const ScalePoint& point,
                                               double threshold_pct) {
    struct Sample {
        const BuildEntry* build;
        double value;
    };
    std::vector<Sample> samples;
    for (const auto& entry : series.builds)
        for (const auto& r : entry.table.rows)
            if (r.metric_name == metric && r.nodes == point.nodes &&
                r.procs_per_node == point.procs_per_node)
                samples.push_back({&entry, r.metric_value});

    if (samples.size() < 2)
        throw InsufficientHistory("need at least 2 builds with metric \"" + metric +
                                  "\" at " + point_label(point) + ", have " +
                                  std::to_string(samples.size()));

    std::vector<RegressionFlag> flags;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double prev = samples[i - 1].value;
        const double next = samples[i].value;
        if (prev <= 0)
            throw NonpositiveValue("metric \"" + metric + "\" in build " +
                                   samples[i - 1].build->build_num +
                                   " is not positive");
        const double change_pct = std::abs(next - prev) / prev * 100.0;
        if (change_pct > threshold_pct) {
            RegressionFlag flag;
            flag.from_build = samples[i - 1].build->build_num;
            flag.to_build = samples[i].build->build_num;
            flag.from_commit = samples[i - 1].build->commit_id;
            flag.to_commit = samples[i].build->commit_id;
            flag.point = point;
            flag.metric = metric;
            flag.prev_value = prev;
            flag.new_value = next;
            flag.change_pct = change_pct;
            flag.improvement = next < prev;
            flags.push_back(std::move(flag));
        }
    }
    return flags;
}

BuildSeries load_build_series(const std::filesystem::path& results_dir) {
    BuildSeries series;
    if (!std::filesystem::is_directory(results_dir))
        return series;
    for (const auto& entry : std::filesystem::directory_iterator(results_dir)) {
        if (!entry.is_regular_file()) continue;
        auto build = build_num_from_filename(entry.path().filename().string());
        if (!build) continue;
        series.builds.push_back({*build, "", read_result_csv(entry.path())});
    }
    std::sort(series.builds.begin(), series.builds.end(),
              [](const BuildEntry& a, const BuildEntry& b) {
                  return build_less(a.build_num, b.build_num);
              });
    return series;
}

std::vector<ScalePoint> series_points(const BuildSeries& series,
                                      const std::string& metric,
                                      std::size_t min_builds) {
    std::map<std::pair<int, int>, std::size_t> counts;
    for (const auto& entry : series.builds) {
        std::set<std::pair<int, int>> seen;
        for (const auto& r : entry.table.rows)
            if (r.metric_name == metric) seen.insert({r.nodes, r.procs_per_node});
        for (const auto& p : seen) ++counts[p];
    }
    std::vector<ScalePoint> points;
    for (const auto& [p, n] : counts)
        if (n >= min_builds) points.push_back({p.first, p.second});
    std::sort(points.begin(), points.end(), scale_point_less);
    return points;
}

}  // namespace swarmci
