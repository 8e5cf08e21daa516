#include "swarmci/ci_env.hpp"

#include <chrono>
#include <cstdlib>

namespace swarmci {

namespace {

std::optional<std::string> take(const std::map<std::string, std::string>& env,
                                const char* name, CiEnvironment& out) {
    auto it = env.find(name);
    if (it == env.end()) {
        out.missing.emplace_back(name);
        return std::nullopt;
    }
    out.present.emplace_back(name);
    return it->second;
}

}  // namespace

std::vector<std::string> CiEnvironment::secrets() const {
    std::vector<std::string> out;
    for (const auto& v :
         {docker_username, docker_password, repo_token, os_username, os_password})
        if (v && !v->empty()) out.push_back(*v);
    return out;
}

CiEnvironment load_ci_environment(const std::map<std::string, std::string>& env) {
    CiEnvironment ci;
    ci.docker_username = take(env, "DOCKER_USERNAME", ci);
    ci.docker_password = take(env, "DOCKER_PASSWORD", ci);
    ci.repo_token = take(env, "REPO_TOKEN", ci);
    ci.repo_url = take(env, "REPO_URL", ci);
    ci.repo_branch = take(env, "REPO_BRANCH", ci);
    auto build = take(env, "BUILD_NUM", ci);
    ci.os_username = take(env, "OS_USERNAME", ci);
    ci.os_password = take(env, "OS_PASSWORD", ci);
    ci.os_reservation_id = take(env, "OS_RESERVATION_ID", ci);

    if (build && !build->empty()) {
        ci.build_num = *build;
    } else {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
        ci.build_num = "local-" + std::to_string(secs);
        ci.build_num_defaulted = true;
    }
    return ci;
}

void require_publishable(const CiEnvironment& env) {
    if (!env.repo_token || env.repo_token->empty())
        throw MissingRequiredVar("REPO_TOKEN");
    if (!env.repo_url || env.repo_url->empty())
        throw MissingRequiredVar("REPO_URL");
    if (!env.repo_branch || env.repo_branch->empty())
        throw MissingRequiredVar("REPO_BRANCH");
}

std::map<std::string, std::string> process_ci_env() {
    std::map<std::string, std::string> env;
    for (const char* name : kCiVarNames)
        if (const char* value = std::getenv(name))
            env[name] = value;
    return env;
}

}  // namespace swarmci
