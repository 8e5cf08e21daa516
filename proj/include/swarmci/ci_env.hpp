#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmci/errors.hpp"

namespace swarmci {

// The nine CI environment variables. DOCKER_* and OS_* are accepted and
// redacted but unused by the shipped backends.
inline constexpr const char* kCiVarNames[] = {
    "DOCKER_USERNAME", "DOCKER_PASSWORD", "REPO_TOKEN",
    "REPO_URL",        "REPO_BRANCH",     "BUILD_NUM",
    "OS_USERNAME",     "OS_PASSWORD",     "OS_RESERVATION_ID",
};

struct CiEnvironment {
    std::optional<std::string> docker_username;
    std::optional<std::string> docker_password;
    std::optional<std::string> repo_token;
    std::optional<std::string> repo_url;
    std::optional<std::string> repo_branch;
    std::string build_num;  // "local-<timestamp>" when the variable is absent
    bool build_num_defaulted = false;
    std::optional<std::string> os_username;
    std::optional<std::string> os_password;
    std::optional<std::string> os_reservation_id;

    std::vector<std::string> present;  // variable names found in the env
    std::vector<std::string> missing;

    // Values that must never reach logs or committed files.
    std::vector<std::string> secrets() const;
};

CiEnvironment load_ci_environment(const std::map<std::string, std::string>& env);

// Throws MissingRequiredVar (naming the variable, never a value) unless
// REPO_TOKEN, REPO_URL and REPO_BRANCH are all present.
void require_publishable(const CiEnvironment& env);

// Snapshot of the nine variables from the process environment.
std::map<std::string, std::string> process_ci_env();

}  // namespace swarmci
