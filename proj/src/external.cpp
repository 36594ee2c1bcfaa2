#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <string>
#include <thread>

#include "tsinv/errors.hpp"
#include "tsinv/simulators.hpp"

namespace tsinv {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0)
    throw SimulatorError(std::string("pipe failed: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

void ignore_sigpipe_once() {
  static const bool done = [] {
    struct sigaction current {};
    ::sigaction(SIGPIPE, nullptr, &current);
    if (current.sa_handler == SIG_DFL) ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

std::string format_request(const InputPoint& x) {
  std::string line;
  char buf[40];
  for (std::size_t k = 0; k < x.dim(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", x[k]);
    if (k) line += ' ';
    line += buf;
  }
  line += '\n';
  return line;
}

double remaining_ms(Clock::time_point deadline) {
  return std::chrono::duration<double, std::milli>(deadline - Clock::now()).count();
}

// Kills and reaps the child unless it has already been reaped.
class ChildGuard {
 public:
  explicit ChildGuard(pid_t pid) : pid_(pid) {}
  ~ChildGuard() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }
  pid_t pid() const { return pid_; }
  void release() { pid_ = -1; }

 private:
  pid_t pid_;
};

}  // namespace

TimeSeries eval_external(const InputPoint& x, const ExternalSimSpec& spec, const TimeGrid& grid) {
  if (x.dim() != spec.d)
    throw DomainError("external simulator expects " + std::to_string(spec.d) + " inputs, got " +
                      std::to_string(x.dim()));
  if (grid.count != spec.L)
    throw SimulatorError("external simulator declares L=" + std::to_string(spec.L) +
                         " but the grid has " + std::to_string(grid.count) + " points");
  if (spec.path.empty()) throw SimulatorError("external simulator path is empty");
  ignore_sigpipe_once();

  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(spec.timeout_seconds));

  Pipe to_child = make_pipe();
  Pipe from_child = make_pipe();

  const pid_t pid = ::fork();
  if (pid < 0) throw SimulatorError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(to_child.read.get(), STDIN_FILENO);
    ::dup2(from_child.write.get(), STDOUT_FILENO);
    char* argv[] = {const_cast<char*>(spec.path.c_str()), nullptr};
    ::execv(spec.path.c_str(), argv);
    ::_exit(127);
  }
  ChildGuard child(pid);
  to_child.read.reset();
  from_child.write.reset();

  const std::string request = format_request(x);
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t rc = ::write(to_child.write.get(), request.data() + written, request.size() - written);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;  // child closed stdin; its exit status decides
    }
    written += static_cast<std::size_t>(rc);
  }
  to_child.write.reset();

  std::string output;
  char buf[4096];
  for (;;) {
    const double left = remaining_ms(deadline);
    if (left <= 0) throw SimulatorError("external simulator timed out: " + spec.path);
    pollfd pfd{from_child.read.get(), POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left) + 1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw SimulatorError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    const ssize_t n = ::read(from_child.read.get(), buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SimulatorError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }

  int status = 0;
  for (;;) {
    const pid_t rc = ::waitpid(child.pid(), &status, WNOHANG);
    if (rc == child.pid()) break;
    if (rc < 0 && errno != EINTR) throw SimulatorError("waitpid failed");
    if (remaining_ms(deadline) <= 0) throw SimulatorError("external simulator timed out: " + spec.path);
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  child.release();
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw SimulatorError("external simulator failed (status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) +
                         "): " + spec.path);
  }

  std::vector<double> values;
  values.reserve(spec.L);
  std::istringstream in(output);
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size())
      throw SimulatorError("malformed external simulator output token '" + token + "'");
    if (!std::isfinite(v)) throw SimulatorError("external simulator produced a non-finite value");
    values.push_back(v);
  }
  if (values.size() != spec.L)
    throw SimulatorError("external simulator returned " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(spec.L));
  return TimeSeries(grid, std::move(values));
}

ExternalSimulator::ExternalSimulator(ExternalSimSpec spec, TimeGrid grid)
    : spec_(std::move(spec)), grid_(grid) {
  grid_.validate();
  if (grid_.count != spec_.L)
    throw ConfigError("external simulator L does not match the grid length");
  if (spec_.d == 0) throw ConfigError("external simulator dimension must be positive");
}

TimeSeries ExternalSimulator::evaluate(const InputPoint& x) const {
  if (spec_.reentrant) return eval_external(x, spec_, grid_);
  std::lock_guard lock(mutex_);
  return eval_external(x, spec_, grid_);
}

}  // namespace tsinv
