#include "swarmci/ssh_backend.hpp"

#include <chrono>
#include <fstream>

#include "swarmci/subprocess.hpp"

namespace swarmci {

namespace {

using nlohmann::json;

constexpr double kImagePullTimeoutS = 600.0;

bool looks_like_auth_failure(const std::string& text) {
    return text.find("Permission denied") != std::string::npos ||
           text.find("Authentication failed") != std::string::npos ||
           text.find("publickey") != std::string::npos ||
           text.find("Host key verification failed") != std::string::npos;
}

std::string env_prefix(const std::map<std::string, std::string>& env) {
    if (env.empty()) return "";
    std::string out = "env";
    for (const auto& [k, v] : env) out += " " + k + "=" + shell_quote(v);
    return out + " ";
}

class LocalTransport : public Transport {
public:
    ExecResult run(const std::string&, const std::string& command,
                   const std::map<std::string, std::string>& env,
                   double timeout_s) override {
        CommandSpec spec;
        spec.argv = {"/bin/sh", "-c", "( " + command + " ) 2>&1"};
        spec.env = env;
        spec.timeout_s = timeout_s;
        CommandResult r = run_command(spec);
        return {r.exit_code, r.timed_out, r.out, r.wall_time_s};
    }

    void copy_to(const std::string&, const std::filesystem::path& local,
                 const std::string& remote) override {
        std::filesystem::path dest(remote);
        std::error_code ec;
        std::filesystem::create_directories(dest.parent_path(), ec);
        std::filesystem::copy_file(local, dest,
                                   std::filesystem::copy_options::overwrite_existing, ec);
        if (ec)
            throw IoFailure("copy " + local.string() + " -> " + remote + ": " +
                            ec.message());
    }
};

class SshTransport : public Transport {
public:
    explicit SshTransport(const SshConf& conf) : conf_(conf) {}

    ExecResult run(const std::string& host, const std::string& command,
                   const std::map<std::string, std::string>& env,
                   double timeout_s) override {
        CommandSpec spec;
        spec.argv = ssh_command(conf_, host,
                                env_prefix(env) + "sh -c " + shell_quote(command) +
                                    " 2>&1");
        spec.timeout_s = timeout_s;
        CommandResult r = run_command(spec);
        // ssh's own diagnostics land on stderr; keep them with the output.
        return {r.exit_code, r.timed_out, r.out + r.err, r.wall_time_s};
    }

    void copy_to(const std::string& host, const std::filesystem::path& local,
                 const std::string& remote) override {
        CommandSpec spec;
        spec.argv = {"scp", "-q", "-o", "BatchMode=yes"};
        if (!conf_.identity_file.empty()) {
            spec.argv.push_back("-i");
            spec.argv.push_back(conf_.identity_file);
        }
        spec.argv.push_back(local.string());
        std::string target = conf_.user.empty() ? host : conf_.user + "@" + host;
        spec.argv.push_back(target + ":" + remote);
        spec.timeout_s = conf_.connect_timeout_s * 6;
        CommandResult r = run_command(spec);
        if (r.exit_code != 0)
            throw BackendError("scp to " + host + " failed: " + r.err);
    }

private:
    SshConf conf_;
};

}  // namespace

std::vector<std::string> ssh_command(const SshConf& conf, const std::string& host,
                                     const std::string& remote_command) {
    std::vector<std::string> argv = {
        "ssh",
        "-o", "BatchMode=yes",
        "-o", "StrictHostKeyChecking=accept-new",
        "-o", "ConnectTimeout=" + std::to_string(
                  static_cast<int>(conf.connect_timeout_s)),
    };
    if (!conf.identity_file.empty()) {
        argv.push_back("-i");
        argv.push_back(conf.identity_file);
    }
    argv.push_back(conf.user.empty() ? host : conf.user + "@" + host);
    argv.push_back(remote_command);
    return argv;
}

SshConf SshConf::from_json(const json& conf) {
    SshConf c;
    if (!conf.is_object()) {
        if (conf.is_null()) return c;
        throw SchemaViolation("ssh-cluster conf must be an object");
    }
    if (conf.contains("hosts")) {
        if (!conf.at("hosts").is_array())
            throw SchemaViolation("ssh-cluster conf: hosts must be an array");
        for (const auto& h : conf.at("hosts")) {
            if (!h.is_string() || h.get<std::string>().empty())
                throw SchemaViolation("ssh-cluster conf: hosts entries must be "
                                      "nonempty strings");
            c.hosts.push_back(h.get<std::string>());
        }
    }
    auto read_string = [&](const char* key, std::string& into) {
        if (!conf.contains(key)) return;
        if (!conf.at(key).is_string())
            throw SchemaViolation(std::string("ssh-cluster conf: ") + key +
                                  " must be a string");
        into = conf.at(key).get<std::string>();
    };
    read_string("user", c.user);
    read_string("identity_file", c.identity_file);
    read_string("workdir", c.workdir);
    read_string("transport", c.transport);
    if (conf.contains("generate_key")) {
        if (!conf.at("generate_key").is_boolean())
            throw SchemaViolation("ssh-cluster conf: generate_key must be a boolean");
        c.generate_key = conf.at("generate_key").get<bool>();
    }
    if (conf.contains("connect_timeout_s")) {
        if (!conf.at("connect_timeout_s").is_number())
            throw SchemaViolation("ssh-cluster conf: connect_timeout_s must be a number");
        c.connect_timeout_s = conf.at("connect_timeout_s").get<double>();
    }
    if (c.transport != "ssh" && c.transport != "local")
        throw SchemaViolation("ssh-cluster conf: transport must be \"ssh\" or \"local\"");
    return c;
}

std::vector<ValidationFinding> SshConf::validate(const json& conf,
                                                 const std::string& prefix,
                                                 int required_nodes) {
    std::vector<ValidationFinding> findings;
    SshConf c;
    try {
        c = from_json(conf);
    } catch (const SchemaViolation& e) {
        findings.push_back({prefix, e.what()});
        return findings;
    }
    if (!conf.is_object() || !conf.contains("hosts"))
        findings.push_back({prefix + ".hosts", "required host list is missing"});
    else if (c.hosts.empty())
        findings.push_back({prefix + ".hosts", "host list must not be empty"});
    else if (static_cast<int>(c.hosts.size()) < required_nodes)
        findings.push_back({prefix + ".hosts",
                            "insufficient hosts: " + std::to_string(c.hosts.size()) +
                                " configured, " + std::to_string(required_nodes) +
                                " needed at the largest scale point"});
    if (c.workdir.empty())
        findings.push_back({prefix + ".workdir", "workdir must not be empty"});
    if (c.connect_timeout_s <= 0)
        findings.push_back({prefix + ".connect_timeout_s", "must be > 0"});
    if (c.generate_key && !c.identity_file.empty())
        findings.push_back({prefix + ".generate_key",
                            "generate_key and identity_file are mutually exclusive"});
    return findings;
}

SshClusterBackend::SshClusterBackend(SshConf conf, const std::string& image_ref,
                                     std::unique_ptr<Transport> transport)
    : conf_(std::move(conf)), image_ref_(image_ref), transport_(std::move(transport)) {
    if (!transport_) {
        if (conf_.transport == "local")
            transport_ = std::make_unique<LocalTransport>();
        else
            transport_ = std::make_unique<SshTransport>(conf_);
    }
}

SshClusterBackend::~SshClusterBackend() {
    if (!ephemeral_key_.empty()) {
        std::error_code ec;
        std::filesystem::remove(ephemeral_key_, ec);
        std::filesystem::remove(ephemeral_key_.string() + ".pub", ec);
    }
}

std::string SshClusterBackend::remote_run_dir(const std::string& alloc_id) const {
    return conf_.workdir + "/" + alloc_id;
}

Allocation SshClusterBackend::do_provision(int node_count) {
    if (static_cast<int>(conf_.hosts.size()) < node_count)
        throw InsufficientCapacity("requested " + std::to_string(node_count) +
                                   " nodes, " + std::to_string(conf_.hosts.size()) +
                                   " hosts configured");

    auto t0 = std::chrono::steady_clock::now();

    if (conf_.generate_key && conf_.identity_file.empty() && conf_.transport == "ssh") {
        auto key = std::filesystem::temp_directory_path() /
                   ("swarmci_key_" + std::to_string(::getpid()));
        CommandSpec spec;
        spec.argv = {"ssh-keygen", "-q", "-t", "ed25519", "-N", "", "-f", key.string()};
        spec.timeout_s = 30;
        CommandResult r = run_command(spec);
        if (r.exit_code != 0)
            throw BackendError("ssh-keygen failed: " + r.err);
        ephemeral_key_ = key;
        conf_.identity_file = key.string();
        // The public key must be authorized on the hosts out of band (e.g.
        // cloud-init); we only guarantee a fresh private key per job.
    }

    Allocation alloc;
    alloc.alloc_id = next_alloc_id("ssh");
    const std::string run_dir = remote_run_dir(alloc.alloc_id);

    for (int i = 0; i < node_count; ++i) {
        const std::string& host = conf_.hosts[static_cast<std::size_t>(i)];
        auto r = transport_->run(host, "mkdir -p " + shell_quote(run_dir), {},
                                 conf_.connect_timeout_s);
        if (r.timed_out)
            throw ProvisionTimeout("node " + host + " did not answer within " +
                                   std::to_string(conf_.connect_timeout_s) + "s");
        if (r.exit_code != 0) {
            if (looks_like_auth_failure(r.output))
                throw AuthFailure("cannot authenticate to " + host + ": " + r.output);
            throw BackendError("provisioning failed on " + host + ": " + r.output);
        }
        if (!image_ref_.empty()) {
            auto pull = transport_->run(host, "docker pull " + shell_quote(image_ref_),
                                        {}, kImagePullTimeoutS);
            if (pull.exit_code != 0)
                throw BackendError("image pull failed on " + host + ": " + pull.output);
        }
        alloc.node_handles.push_back(host);
    }

    alloc.provision_wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return alloc;
}

LaunchResult SshClusterBackend::do_launch(const Allocation& alloc,
                                          const LaunchRequest& req) {
    if (!std::filesystem::exists(req.script))
        throw LaunchFailure("run script not found: " + req.script.string());

    const std::string label = point_label(req.point);
    const std::string run_dir = remote_run_dir(alloc.alloc_id);
    const std::string& head = alloc.node_handles.front();

    const std::string remote_script = run_dir + "/run_" + label + ".sh";
    transport_->copy_to(head, req.script, remote_script);

    // Hostfile for the point's nodes, each with the point's slot count; the
    // user script decides how to hand it to mpirun or srun.
    std::string hostfile_text;
    for (int i = 0; i < req.point.nodes; ++i)
        hostfile_text += alloc.node_handles[static_cast<std::size_t>(i)] +
                         " slots=" + std::to_string(req.point.procs_per_node) + "\n";
    auto local_hostfile = std::filesystem::temp_directory_path() /
                          ("swarmci_hostfile_" + alloc.alloc_id + "_" + label);
    {
        std::ofstream hf(local_hostfile, std::ios::binary);
        hf << hostfile_text;
    }
    const std::string remote_hostfile = run_dir + "/hostfile_" + label;
    transport_->copy_to(head, local_hostfile, remote_hostfile);
    std::error_code ec;
    std::filesystem::remove(local_hostfile, ec);

    std::map<std::string, std::string> env = req.env;
    std::string nodelist;
    for (int i = 0; i < req.point.nodes; ++i) {
        if (i) nodelist += ",";
        nodelist += alloc.node_handles[static_cast<std::size_t>(i)];
    }
    env["SWARM_NODELIST"] = nodelist;
    env["SWARM_HOSTFILE"] = remote_hostfile;

    const std::string command =
        "cd " + shell_quote(run_dir) + " && sh " + shell_quote(remote_script);
    auto r = transport_->run(head, command, env, req.timeout_s);

    std::ofstream sink(req.output_sink, std::ios::binary);
    if (!sink)
        throw LaunchFailure("cannot write output sink " + req.output_sink.string());
    sink << r.output;

    LaunchResult result;
    result.exit_code = r.exit_code;
    result.timed_out = r.timed_out;
    result.wall_time_s = r.wall_time_s;
    result.output_path = req.output_sink;
    return result;
}

void SshClusterBackend::do_teardown(const Allocation& alloc) {
    const std::string run_dir = remote_run_dir(alloc.alloc_id);
    std::vector<std::string> unreachable;
    for (const auto& host : alloc.node_handles) {
        try {
            auto r = transport_->run(host, "rm -rf " + shell_quote(run_dir), {},
                                     conf_.connect_timeout_s);
            if (r.exit_code != 0 || r.timed_out)
                unreachable.push_back(host);
        } catch (const std::exception&) {
            unreachable.push_back(host);
        }
    }
    if (!unreachable.empty())
        throw TeardownPartial(unreachable);
}

}  // namespace swarmci
