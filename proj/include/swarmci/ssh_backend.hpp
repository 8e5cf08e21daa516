#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmci/backend.hpp"
#include "swarmci/config.hpp"

namespace swarmci {

struct SshConf {
    std::vector<std::string> hosts;  // ordered; first N get provisioned
    std::string user;
    std::string identity_file;
    bool generate_key = false;  // ephemeral keypair created at provision time
    std::string workdir = "/tmp/swarmci";
    std::string transport = "ssh";  // "ssh" | "local" (run on this machine)
    double connect_timeout_s = 10.0;

    static SshConf from_json(const nlohmann::json& conf);
    static std::vector<ValidationFinding> validate(const nlohmann::json& conf,
                                                   const std::string& path_prefix,
                                                   int required_nodes);
};

// Command execution seam. The default transport shells out to ssh; the
// "local" transport runs everything on this machine, which keeps the whole
// launch path testable without a reachable cluster.
class Transport {
public:
    struct ExecResult {
        int exit_code = -1;
        bool timed_out = false;
        std::string output;  // combined stdout+stderr
        double wall_time_s = 0;
    };

    virtual ~Transport() = default;

    virtual ExecResult run(const std::string& host, const std::string& command,
                           const std::map<std::string, std::string>& env,
                           double timeout_s) = 0;
    virtual void copy_to(const std::string& host,
                         const std::filesystem::path& local,
                         const std::string& remote) = 0;
};

class SshClusterBackend : public Backend {
public:
    // transport == nullptr selects the transport named in conf.
    explicit SshClusterBackend(SshConf conf, const std::string& image_ref = "",
                               std::unique_ptr<Transport> transport = nullptr);
    ~SshClusterBackend() override;

    std::string name() const override { return "ssh-cluster"; }

    const SshConf& conf() const { return conf_; }

private:
    Allocation do_provision(int node_count) override;
    LaunchResult do_launch(const Allocation& alloc, const LaunchRequest& req) override;
    void do_teardown(const Allocation& alloc) override;

    std::string remote_run_dir(const std::string& alloc_id) const;

    SshConf conf_;
    std::string image_ref_;
    std::unique_ptr<Transport> transport_;
    std::filesystem::path ephemeral_key_;  // empty unless generate_key
};

// ssh argv for host+command, exposed for tests of command construction.
std::vector<std::string> ssh_command(const SshConf& conf, const std::string& host,
                                     const std::string& remote_command);

}  // namespace swarmci
