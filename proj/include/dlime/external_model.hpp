#pragma once

// Adapter for a black-box classifier running as a child process. The child's
// stdin and stdout are one end of a socket pair; messages are single-line
// JSON documents:
//
//   handshake  -> {"hello": 1, "m": <features>}      <- {"ok": true}
//   request    -> {"id": <int>, "rows": [[...], ...]} <- {"id": <int>, "proba": [...]}

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlime/core.hpp"
#include "dlime/model.hpp"

namespace dlime {

class ExternalModel final : public OpaqueModel {
 public:
  ExternalModel(std::string command, std::size_t m,
                std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : command_(std::move(command)), m_(m), timeout_(timeout) {
    spawn();
    try {
      handshake();
    } catch (...) {
      shutdown();
      throw;
    }
  }

  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;
  ~ExternalModel() override { shutdown(); }

  std::vector<double> predict_proba(const Matrix& rows) const override {
    check_dimension(m_, rows);
    const auto id = next_id_++;
    const std::string tag = "request " + std::to_string(id);
    nlohmann::ordered_json req{{"id", id}, {"rows", rows.to_rows()}};
    send_line(req.dump(), tag);
    const std::string reply = read_line(tag);
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception&) {
      throw model_error("external model protocol error on " + tag + ": malformed response");
    }
    if (!parsed.is_object() || !parsed.contains("id") || !parsed.contains("proba") ||
        !parsed["proba"].is_array())
      throw model_error("external model protocol error on " + tag + ": missing id or proba");
    if (!parsed["id"].is_number_integer() || parsed["id"].get<long long>() != id)
      throw model_error("external model protocol error on " + tag + ": response id mismatch");
    const auto& proba = parsed["proba"];
    if (proba.size() != rows.rows())
      throw model_error("external model protocol error on " + tag + ": expected " +
                        std::to_string(rows.rows()) + " probabilities, got " +
                        std::to_string(proba.size()));
    std::vector<double> out;
    out.reserve(proba.size());
    for (const auto& p : proba) {
      if (!p.is_number())
        throw model_error("external model protocol error on " + tag + ": non-numeric probability");
      const double v = p.get<double>();
      if (!(v >= 0.0 && v <= 1.0))
        throw model_error("external model protocol-range error on " + tag + ": probability " +
                          p.dump() + " outside [0, 1]");
      out.push_back(v);
    }
    return out;
  }

  std::string kind() const override { return "external"; }
  std::size_t n_features() const override { return m_; }
  nlohmann::ordered_json to_json() const override {
    return {{"spec_version", kSpecVersion},
            {"kind", "external"},
            {"n_features", m_},
            {"command", command_}};
  }

 private:
  void handshake() {
    nlohmann::ordered_json hello{{"hello", 1}, {"m", m_}};
    send_line(hello.dump(), "handshake");
    const std::string reply = read_line("handshake");
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception&) {
      throw model_error("external model handshake failure: malformed reply '" + reply + "'");
    }
    if (!parsed.is_object() || !parsed.contains("ok") || parsed["ok"] != true)
      throw model_error("external model handshake failure: reply '" + reply + "'");
  }

  void spawn() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
      throw model_error("external model: socketpair failed: " + std::string(std::strerror(errno)));
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw model_error("external model: fork failed");
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
  }

  void shutdown() noexcept {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) != 0) {
          pid_ = -1;
          return;
        }
        ::usleep(2000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void send_line(const std::string& payload, const std::string& tag) const {
    std::string msg = payload + "\n";
    std::size_t sent = 0;
    while (sent < msg.size()) {
      const ssize_t k = ::send(fd_, msg.data() + sent, msg.size() - sent, MSG_NOSIGNAL);
      if (k < 0) {
        if (errno == EINTR) continue;
        throw model_error("external model transport error on " + tag + ": " +
                          std::string(std::strerror(errno)));
      }
      sent += static_cast<std::size_t>(k);
    }
  }

  std::string read_line(const std::string& tag) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0)
        throw model_error("external model timeout on " + tag + " after " +
                          std::to_string(timeout_.count()) + " ms");
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r < 0)
        throw model_error("external model transport error on " + tag + ": poll failed");
      if (r == 0) continue;
      char chunk[4096];
      const ssize_t k = ::recv(fd_, chunk, sizeof chunk, 0);
      if (k < 0 && errno == EINTR) continue;
      if (k <= 0)
        throw model_error("external model transport error on " + tag +
                          ": process closed the stream");
      buffer_.append(chunk, static_cast<std::size_t>(k));
    }
  }

  std::string command_;
  std::size_t m_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  pid_t pid_ = -1;
  mutable long long next_id_ = 0;
  mutable std::string buffer_;
};

}  // namespace dlime
