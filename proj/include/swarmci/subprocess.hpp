#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace swarmci {

struct CommandSpec {
    std::vector<std::string> argv;
    std::map<std::string, std::string> env;  // added to / overriding the parent env
    std::optional<std::filesystem::path> cwd;
    double timeout_s = 0;     // 0 disables the deadline
    double kill_grace_s = 2;  // SIGTERM -> SIGKILL gap on timeout/cancel
    // When set, child stdout+stderr go combined into this file and the
    // out/err strings stay empty.
    std::optional<std::filesystem::path> output_file;
    const std::atomic<bool>* cancel = nullptr;
};

struct CommandResult {
    int exit_code = -1;  // 128+N when killed by signal N
    bool timed_out = false;
    bool cancelled = false;
    std::string out;
    std::string err;
    double wall_time_s = 0;
};

// Runs a command in its own process group; on deadline or cancellation the
// whole group gets SIGTERM, a grace period, then SIGKILL.
CommandResult run_command(const CommandSpec& spec);

std::string shell_quote(const std::string& s);

}  // namespace swarmci
