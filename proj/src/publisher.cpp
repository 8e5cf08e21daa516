#include "swarmci/publisher.hpp"

#include <algorithm>

#include "swarmci/subprocess.hpp"

namespace swarmci {

namespace {

bool looks_like_auth_failure(const std::string& text) {
    for (const char* marker :
         {"Authentication failed", "authentication failed", "could not read Username",
          "invalid username or password", "Permission denied", "HTTP 401", "HTTP 403",
          "The requested URL returned error: 401",
          "The requested URL returned error: 403"})
        if (text.find(marker) != std::string::npos) return true;
    return false;
}

bool looks_like_rejected_push(const std::string& text) {
    for (const char* marker : {"[rejected]", "non-fast-forward", "fetch first",
                               "failed to push some refs", "cannot lock ref"})
        if (text.find(marker) != std::string::npos) return true;
    return false;
}

struct GitRunner {
    const PublishTarget& target;
    std::vector<std::string> secrets;

    CommandResult run(std::vector<std::string> args) const {
        CommandSpec spec;
        spec.argv = {target.git_exe, "-C", target.checkout_dir.string()};
        spec.argv.insert(spec.argv.end(), args.begin(), args.end());
        spec.timeout_s = 300;
        CommandResult r = run_command(spec);
        r.out = redact(r.out, secrets);
        r.err = redact(r.err, secrets);
        return r;
    }

    // Succeed-or-throw variant for steps with no recovery path.
    CommandResult need(std::vector<std::string> args, const std::string& what) const {
        CommandResult r = run(std::move(args));
        if (r.exit_code != 0)
            throw RunError(what + " failed: " + r.err + r.out);
        return r;
    }
};

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace

std::string redact(std::string text, const std::vector<std::string>& secrets) {
    for (int pass = 0; pass < 8; ++pass) {
        bool replaced = false;
        for (const auto& secret : secrets) {
            if (secret.empty() || secret == "***") continue;
            std::size_t pos = 0;
            while ((pos = text.find(secret, pos)) != std::string::npos) {
                text.replace(pos, secret.size(), "***");
                pos += 3;
                replaced = true;
            }
        }
        if (!replaced) break;
    }
    return text;
}

std::string remote_url(const PublishTarget& target) {
    const std::string& url = target.repo_url;
    if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0) {
        if (target.token.empty() || url.find('@') != std::string::npos) return url;
        auto scheme_end = url.find("://") + 3;
        return url.substr(0, scheme_end) + target.token + "@" + url.substr(scheme_end);
    }
    // Local paths and file/ssh URLs pass through (test harnesses, mirrors).
    if (url.rfind("file:", 0) == 0 || url.rfind("ssh://", 0) == 0 ||
        url.rfind("/", 0) == 0 || url.rfind("./", 0) == 0 || url.rfind("../", 0) == 0)
        return url;
    // Scheme-less host path: the token-authenticated https form.
    if (target.token.empty()) return "https://" + url;
    return "https://" + target.token + "@" + url;
}

std::string publish_result(const std::filesystem::path& file,
                           const PublishTarget& target) {
    if (!std::filesystem::exists(file))
        throw IoFailure("result file not found: " + file.string());
    if (target.branch.empty())
        throw SchemaViolation("publish branch must not be empty");
    if (target.build_num.empty())
        throw SchemaViolation("publish build number must not be empty");

    const std::string url = remote_url(target);
    GitRunner git{target, {}};
    if (!target.token.empty()) {
        git.secrets.push_back(target.token);
        git.secrets.push_back(url);
    }

    const auto results_dir = target.checkout_dir / target.results_subdir;
    std::error_code ec;
    std::filesystem::create_directories(results_dir, ec);
    if (ec)
        throw IoFailure("cannot create " + results_dir.string() + ": " + ec.message());
    const auto dest = results_dir / file.filename();
    if (!std::filesystem::equivalent(file, dest, ec) || ec) {
        std::filesystem::copy_file(file, dest,
                                   std::filesystem::copy_options::overwrite_existing,
                                   ec);
        if (ec)
            throw IoFailure("cannot copy result into " + dest.string() + ": " +
                            ec.message());
    }

    const std::string rel = target.results_subdir + "/" + file.filename().string();
    git.need({"add", rel}, "git add");
    // --allow-empty keeps republishing the same build (identical bytes) a
    // distinct commit instead of a "nothing to commit" failure.
    git.need({"-c", "user.name=" + target.committer_name,
              "-c", "user.email=" + target.committer_email, "commit", "--allow-empty",
              "--quiet", "--message", commit_message(target.build_num)},
             "git commit");

    auto push = [&]() { return git.run({"push", "--quiet", url,
                                        "HEAD:" + target.branch}); };

    CommandResult r = push();
    if (r.exit_code != 0) {
        const std::string text = r.err + r.out;
        if (looks_like_auth_failure(text))
            throw AuthFailure("push rejected by authentication: " + text);
        if (!looks_like_rejected_push(text))
            throw RunError("git push failed: " + text);

        // Someone pushed in between; rebase our commit onto theirs and retry.
        CommandResult fetch = git.run({"fetch", url, target.branch});
        if (fetch.exit_code != 0)
            throw PushRejected("push rejected and fetch of " + target.branch +
                               " failed: " + fetch.err + fetch.out);
        CommandResult rebase =
            git.run({"-c", "user.name=" + target.committer_name,
                     "-c", "user.email=" + target.committer_email,
                     "rebase", "FETCH_HEAD"});
        if (rebase.exit_code != 0) {
            git.run({"rebase", "--abort"});
            throw PushRejected("push rejected and rebase failed: " + rebase.err +
                               rebase.out);
        }
        r = push();
        if (r.exit_code != 0) {
            const std::string retry_text = r.err + r.out;
            if (looks_like_auth_failure(retry_text))
                throw AuthFailure("push rejected by authentication: " + retry_text);
            throw PushRejected("push rejected twice: " + retry_text);
        }
    }

    return trim(git.need({"rev-parse", "HEAD"}, "git rev-parse").out);
}

}  // namespace swarmci
