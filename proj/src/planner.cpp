#include "swarmci/planner.hpp"

#include <algorithm>
#include <charconv>

#include "swarmci/errors.hpp"

namespace swarmci {

bool scale_point_less(const ScalePoint& a, const ScalePoint& b) {
    if (a.total_procs() != b.total_procs()) return a.total_procs() < b.total_procs();
    return a.nodes < b.nodes;
}

std::string point_label(const ScalePoint& p) {
    return std::to_string(p.nodes) + "x" + std::to_string(p.procs_per_node);
}

ScalePoint parse_point_label(const std::string& label) {
    auto sep = label.find('x');
    if (sep == std::string::npos || sep == 0 || sep + 1 >= label.size())
        throw SchemaViolation("scale point must look like <nodes>x<ppn>, got \"" +
                              label + "\"");
    ScalePoint p;
    auto parse_int = [&](const char* first, const char* last, int& out) {
        auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last || out < 1)
            throw SchemaViolation("scale point must look like <nodes>x<ppn>, got \"" +
                                  label + "\"");
    };
    parse_int(label.data(), label.data() + sep, p.nodes);
    parse_int(label.data() + sep + 1, label.data() + label.size(), p.procs_per_node);
    return p;
}

std::vector<int> expand_axis(AxisRange range, ScaleMode mode, int step) {
    if (range.lo < 1)
        throw RangeError("range minimum must be >= 1, got " + std::to_string(range.lo));
    if (range.lo > range.hi)
        throw RangeError("range has min > max (" + std::to_string(range.lo) + " > " +
                         std::to_string(range.hi) + ")");

    std::vector<int> out;
    if (mode == ScaleMode::linear) {
        if (step < 1)
            throw RangeError("linear step must be >= 1, got " + std::to_string(step));
        for (long long v = range.lo; v <= range.hi; v += step)
            out.push_back(static_cast<int>(v));
    } else {
        for (long long v = range.lo; v <= range.hi; v *= 2)
            out.push_back(static_cast<int>(v));
    }
    if (out.back() != range.hi)
        out.push_back(range.hi);
    return out;
}

RunMatrix expand_matrix(const ScalabilitySpec& spec, std::size_t cap) {
    const auto nodes = expand_axis(spec.num_of_nodes, spec.mode, spec.step);
    const auto ppn = expand_axis(spec.proc_per_node, spec.mode, spec.step);

    const std::size_t product = nodes.size() * ppn.size();
    if (product > cap)
        throw MatrixTooLarge("run matrix would have " + std::to_string(product) +
                             " points, cap is " + std::to_string(cap));

    RunMatrix matrix;
    matrix.points.reserve(product);
    for (int n : nodes)
        for (int p : ppn)
            matrix.points.push_back({n, p});

    std::sort(matrix.points.begin(), matrix.points.end(), scale_point_less);
    matrix.points.erase(std::unique(matrix.points.begin(), matrix.points.end()),
                        matrix.points.end());

    for (const auto& p : matrix.points)
        matrix.max_nodes = std::max(matrix.max_nodes, p.nodes);
    return matrix;
}

int required_nodes(const RunMatrix& matrix) {
    if (matrix.points.empty())
        throw EmptyMatrix("run matrix has no points");
    return matrix.max_nodes;
}

}  // namespace swarmci
