#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "swarmci/errors.hpp"
#include "swarmci/planner.hpp"

namespace swarmci {

struct Allocation {
    std::string alloc_id;  // unique per process lifetime
    std::vector<std::string> node_handles;
    double provision_wall_time_s = 0;
};

struct LaunchRequest {
    ScalePoint point;
    std::filesystem::path script;
    double timeout_s = 0;  // must be > 0
    std::map<std::string, std::string> env;
    std::filesystem::path output_sink;  // combined stdout/stderr capture
};

struct LaunchResult {
    int exit_code = -1;
    double wall_time_s = 0;
    bool timed_out = false;
    std::filesystem::path output_path;

    bool ok() const { return exit_code == 0 && !timed_out; }
};

struct TeardownReport {
    bool released_now = true;  // false on the idempotent second call
};

enum class BackendCallKind { provision, launch, teardown };

struct BackendCall {
    BackendCallKind kind;
    int node_count = 0;   // provision only
    ScalePoint point;     // launch only
};

// Compute-platform abstraction. The public surface is non-virtual so every
// implementation shares the call log and the idempotent-teardown contract;
// implementations override the do_* hooks.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string name() const = 0;

    Allocation provision(int node_count);
    LaunchResult launch(const Allocation& alloc, const LaunchRequest& req);
    TeardownReport teardown(const Allocation& alloc);

    const std::vector<BackendCall>& call_log() const { return calls_; }

    // SWARM_NODES / SWARM_PPN / SWARM_TOTAL_PROCS for a scale point.
    static std::map<std::string, std::string> scale_env(const ScalePoint& p);

private:
    virtual Allocation do_provision(int node_count) = 0;
    virtual LaunchResult do_launch(const Allocation& alloc, const LaunchRequest& req) = 0;
    virtual void do_teardown(const Allocation& alloc) = 0;

    std::vector<BackendCall> calls_;
    std::set<std::string> released_;
};

std::string next_alloc_id(const std::string& prefix);

}  // namespace swarmci
