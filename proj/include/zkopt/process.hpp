#pragma once

#include <chrono>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "zkopt/common.hpp"

namespace zkopt {

struct CommandResult {
    int exit_code = -1;
    bool signaled = false;
    std::string out;
    std::string err;
    double wall_seconds = 0.0;

    bool ok() const { return !signaled && exit_code == 0; }
};

/// Run argv[0] with the given arguments, capturing stdout and stderr.
/// Never uses a shell. Throws only on fork/pipe failure; a missing
/// executable surfaces as exit code 127 with a note on stderr.
inline CommandResult run_command(const std::vector<std::string>& argv,
                                 const std::string& cwd = {}) {
    if (argv.empty())
        throw Error("run_command: empty argv");

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw Error("run_command: pipe failed");

    const auto t0 = std::chrono::steady_clock::now();
    const pid_t pid = fork();
    if (pid < 0)
        throw Error("run_command: fork failed");

    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]); close(out_pipe[1]);
        close(err_pipe[0]); close(err_pipe[1]);
        if (!cwd.empty() && chdir(cwd.c_str()) != 0)
            _exit(126);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv)
            args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        const char* msg = "exec failed: ";
        (void)!write(STDERR_FILENO, msg, strlen(msg));
        (void)!write(STDERR_FILENO, argv[0].c_str(), argv[0].size());
        (void)!write(STDERR_FILENO, "\n", 1);
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);

    CommandResult res;
    // Interleaved drain so neither pipe can fill up and stall the child.
    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    std::string* sinks[2] = {&res.out, &res.err};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
        if (poll(fds, 2, -1) < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        for (int i = 0; i < 2; i++) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP)))
                continue;
            const ssize_t n = read(fds[i].fd, buf, sizeof buf);
            if (n > 0) {
                sinks[i]->append(buf, static_cast<size_t>(n));
            } else {
                close(fds[i].fd);
                fds[i].fd = -1;
                open_fds--;
            }
        }
    }

    int status = 0;
    waitpid(pid, &status, 0);
    const auto t1 = std::chrono::steady_clock::now();
    res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    if (WIFEXITED(status)) {
        res.exit_code = WEXITSTATUS(status);
    } else {
        res.signaled = true;
        res.exit_code = WIFSIGNALED(status) ? 128 + WTERMSIG(status) : -1;
    }
    return res;
}

inline std::string join_argv(const std::vector<std::string>& argv) {
    std::string s;
    for (size_t i = 0; i < argv.size(); i++) {
        if (i)
            s += ' ';
        const bool quote = argv[i].find(' ') != std::string::npos || argv[i].empty();
        if (quote)
            s += '\'' + argv[i] + '\'';
        else
            s += argv[i];
    }
    return s;
}

} // namespace zkopt
