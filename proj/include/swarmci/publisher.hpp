#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "swarmci/errors.hpp"

namespace swarmci {

struct PublishTarget {
    std::string repo_url;  // host path without scheme, or full URL / local path
    std::string branch;
    std::string token;  // never logged, never committed
    std::string build_num;
    std::filesystem::path checkout_dir = ".";  // the CI checkout
    std::string results_subdir = "scalability-results";
    std::string git_exe = "git";
    std::string committer_name = "swarmci";
    std::string committer_email = "swarmci@localhost";
};

// Every occurrence of every secret becomes "***". Idempotent.
std::string redact(std::string text, const std::vector<std::string>& secrets);

// https://<token>@<repo_url> for scheme-less URLs; full URLs and local
// paths pass through unchanged.
std::string remote_url(const PublishTarget& target);

inline std::string commit_message(const std::string& build_num) {
    return "BeeSwarm commit " + build_num + " [skip ci]";
}

// Copies file under <checkout>/<results_subdir>/, commits with the skip-ci
// message, pushes HEAD:<branch>. One fetch-rebase retry on a rejected push;
// a second rejection surfaces PushRejected. Returns the pushed commit id.
// All surfaced git output is redacted.
std::string publish_result(const std::filesystem::path& file,
                           const PublishTarget& target);

}  // namespace swarmci
