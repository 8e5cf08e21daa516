#include "swarmci/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>
#include <thread>

#include "swarmci/errors.hpp"

namespace swarmci {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

// Reads until the pipe would block; returns false once the writer side is gone.
bool drain(int fd, std::string& sink) {
    char buf[4096];
    for (;;) {
        ssize_t n = read(fd, buf, sizeof buf);
        if (n > 0) {
            sink.append(buf, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) return false;
        if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
        if (errno == EINTR) continue;
        return false;
    }
}

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

CommandResult run_command(const CommandSpec& spec) {
    if (spec.argv.empty())
        throw std::invalid_argument("run_command: empty argv");

    int out_pipe[2] = {-1, -1};
    int err_pipe[2] = {-1, -1};
    const bool to_file = spec.output_file.has_value();
    if (!to_file) {
        if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
            throw IoFailure("pipe() failed: " + std::string(strerror(errno)));
    }

    auto t0 = Clock::now();
    pid_t pid = fork();
    if (pid < 0)
        throw IoFailure("fork() failed: " + std::string(strerror(errno)));

    if (pid == 0) {
        setpgid(0, 0);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) dup2(devnull, STDIN_FILENO);
        if (to_file) {
            int fd = open(spec.output_file->c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
            if (fd < 0) _exit(127);
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
        } else {
            dup2(out_pipe[1], STDOUT_FILENO);
            dup2(err_pipe[1], STDERR_FILENO);
            close(out_pipe[0]);
            close(out_pipe[1]);
            close(err_pipe[0]);
            close(err_pipe[1]);
        }
        if (spec.cwd && chdir(spec.cwd->c_str()) != 0) _exit(127);
        for (const auto& [k, v] : spec.env) setenv(k.c_str(), v.c_str(), 1);

        std::vector<char*> argv;
        argv.reserve(spec.argv.size() + 1);
        for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        // exec failed; 127 matches the shell convention for "not found"
        _exit(127);
    }

    setpgid(pid, pid);  // parent-side too, so an early kill hits the group

    CommandResult result;
    if (!to_file) {
        close(out_pipe[1]);
        close(err_pipe[1]);
        set_nonblocking(out_pipe[0]);
        set_nonblocking(err_pipe[0]);
    }

    bool out_open = !to_file, err_open = !to_file;
    bool child_done = false;
    int status = 0;

    auto reap_nohang = [&]() {
        if (child_done) return;
        if (waitpid(pid, &status, WNOHANG) == pid) child_done = true;
    };

    for (;;) {
        reap_nohang();

        if (out_open || err_open) {
            struct pollfd fds[2];
            nfds_t nfds = 0;
            int out_idx = -1, err_idx = -1;
            if (out_open) {
                out_idx = static_cast<int>(nfds);
                fds[nfds++] = {out_pipe[0], POLLIN, 0};
            }
            if (err_open) {
                err_idx = static_cast<int>(nfds);
                fds[nfds++] = {err_pipe[0], POLLIN, 0};
            }
            if (poll(fds, nfds, 50) > 0) {
                if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP)))
                    out_open = drain(out_pipe[0], result.out);
                if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP)))
                    err_open = drain(err_pipe[0], result.err);
            }
        } else if (!child_done) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }

        if (child_done) {
            // Grandchildren inheriting the pipe keep it from reaching EOF, so
            // once the child itself is gone we only drain what is ready.
            if (out_open) out_open = drain(out_pipe[0], result.out) && false;
            if (err_open) err_open = drain(err_pipe[0], result.err) && false;
            break;
        }

        const bool cancel_hit = spec.cancel && spec.cancel->load();
        const bool deadline_hit =
            spec.timeout_s > 0 && seconds_since(t0) > spec.timeout_s;
        if (cancel_hit || deadline_hit) {
            result.timed_out = deadline_hit;
            result.cancelled = cancel_hit && !deadline_hit;
            kill(-pid, SIGTERM);
            auto tk = Clock::now();
            while (!child_done && seconds_since(tk) < spec.kill_grace_s) {
                reap_nohang();
                if (child_done) break;
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
            }
            if (!child_done) {
                kill(-pid, SIGKILL);
                waitpid(pid, &status, 0);
                child_done = true;
            }
            if (out_open) drain(out_pipe[0], result.out);
            if (err_open) drain(err_pipe[0], result.err);
            break;
        }
    }

    if (!to_file) {
        close(out_pipe[0]);
        close(err_pipe[0]);
    }

    result.exit_code = decode_status(status);
    result.wall_time_s = seconds_since(t0);
    return result;
}

}  // namespace swarmci
