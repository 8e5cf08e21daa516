#include "swarmci/backend.hpp"

#include <atomic>

namespace swarmci {

std::string next_alloc_id(const std::string& prefix) {
    static std::atomic<unsigned long> counter{0};
    return prefix + "-alloc-" + std::to_string(++counter);
}

std::map<std::string, std::string> Backend::scale_env(const ScalePoint& p) {
    return {
        {"SWARM_NODES", std::to_string(p.nodes)},
        {"SWARM_PPN", std::to_string(p.procs_per_node)},
        {"SWARM_TOTAL_PROCS", std::to_string(p.total_procs())},
    };
}

Allocation Backend::provision(int node_count) {
    calls_.push_back({BackendCallKind::provision, node_count, {}});
    if (node_count < 1)
        throw BackendError("node_count must be >= 1, got " + std::to_string(node_count));
    Allocation alloc = do_provision(node_count);
    if (static_cast<int>(alloc.node_handles.size()) != node_count)
        throw BackendError(name() + " returned " +
                           std::to_string(alloc.node_handles.size()) + " nodes for a " +
                           std::to_string(node_count) + "-node request");
    return alloc;
}

LaunchResult Backend::launch(const Allocation& alloc, const LaunchRequest& req) {
    calls_.push_back({BackendCallKind::launch, 0, req.point});
    if (req.timeout_s <= 0)
        throw LaunchFailure("launch timeout must be positive");
    if (req.point.nodes > static_cast<int>(alloc.node_handles.size()))
        throw LaunchFailure("point " + point_label(req.point) + " needs " +
                            std::to_string(req.point.nodes) + " nodes but only " +
                            std::to_string(alloc.node_handles.size()) +
                            " are allocated");
    LaunchResult result = do_launch(alloc, req);
    if (result.timed_out && result.exit_code == 0)
        result.exit_code = 124;  // timed out must read as failure
    return result;
}

TeardownReport Backend::teardown(const Allocation& alloc) {
    calls_.push_back({BackendCallKind::teardown, 0, {}});
    if (released_.count(alloc.alloc_id))
        return {false};
    do_teardown(alloc);  // a partial teardown is not marked released
    released_.insert(alloc.alloc_id);
    return {true};
}

}  // namespace swarmci
