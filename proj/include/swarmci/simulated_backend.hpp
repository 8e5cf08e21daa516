#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmci/backend.hpp"
#include "swarmci/config.hpp"

namespace swarmci {

// Deterministic local backend. Provisioning and script execution are
// modeled, not performed: provision time follows a latency model that is
// near-constant in node count, launches follow a strong-scaling workload
// model T(p) = t1/p, and both get a seeded jitter. Identical conf + seed
// yields identical wall times and output bytes.
struct SimulatedConf {
    std::uint64_t seed = 42;
    double base_latency_s = 600.0;
    double per_node_latency_s = 1.5;
    double jitter_pct = 2.0;
    double workload_t1_s = 8.0;
    std::optional<int> capacity;  // unset = unlimited synthetic nodes

    // Fault injection, keyed by point label "NxP".
    std::set<std::string> fail_points;
    std::set<std::string> timeout_points;
    int fail_exit_code = 1;
    bool fail_provision = false;

    static SimulatedConf from_json(const nlohmann::json& conf);
    static std::vector<ValidationFinding> validate(const nlohmann::json& conf,
                                                   const std::string& path_prefix,
                                                   int required_nodes);
};

class SimulatedBackend : public Backend {
public:
    explicit SimulatedBackend(SimulatedConf conf) : conf_(conf) {}

    std::string name() const override { return "simulated"; }

    const SimulatedConf& conf() const { return conf_; }

    // Modeled provision wall time for node_count nodes (jitter included).
    double modeled_provision_s(int node_count) const;
    // Modeled script wall time at a scale point (jitter included).
    double modeled_wall_s(const ScalePoint& p) const;

private:
    Allocation do_provision(int node_count) override;
    LaunchResult do_launch(const Allocation& alloc, const LaunchRequest& req) override;
    void do_teardown(const Allocation& alloc) override;

    double jitter_factor(std::uint64_t a, std::uint64_t b) const;

    SimulatedConf conf_;
};

}  // namespace swarmci
