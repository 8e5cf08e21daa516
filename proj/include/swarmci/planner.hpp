#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "swarmci/config.hpp"

namespace swarmci {

// One (nodes, processes-per-node) configuration of the test matrix.
struct ScalePoint {
    int nodes = 1;
    int procs_per_node = 1;

    long long total_procs() const {
        return static_cast<long long>(nodes) * procs_per_node;
    }

    bool operator==(const ScalePoint&) const = default;
};

// Matrix order: ascending (total_procs, nodes). Keeps CSV output and
// speedup baselines deterministic.
bool scale_point_less(const ScalePoint& a, const ScalePoint& b);

std::string point_label(const ScalePoint& p);            // "4x16"
ScalePoint parse_point_label(const std::string& label);  // throws SchemaViolation

struct RunMatrix {
    std::vector<ScalePoint> points;  // unique, sorted by (total_procs, nodes)
    int max_nodes = 0;
};

// linear(step s): lo, lo+s, lo+2s, ... capped at hi; log2: lo*2^k <= hi.
// hi is appended when stepping overshoots it, so the stated maximum is
// always tested. Output strictly increasing.
std::vector<int> expand_axis(AxisRange range, ScaleMode mode, int step = 1);

inline constexpr std::size_t kDefaultMatrixCap = 4096;

RunMatrix expand_matrix(const ScalabilitySpec& spec,
                        std::size_t cap = kDefaultMatrixCap);

// The provisioning size: maximum node count over all points.
int required_nodes(const RunMatrix& matrix);

}  // namespace swarmci
