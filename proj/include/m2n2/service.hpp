#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "m2n2/segmenter.hpp"

namespace httplib {
class Server;
}

namespace m2n2::service {

struct ServiceOptions {
  std::chrono::seconds session_ttl{1800};
  std::size_t max_sessions = 64;
  std::size_t max_payload_bytes = std::size_t{1} << 30;
  MarkovParams params;
};

/// HTTP status plus message; handlers turn it into a JSON error body.
class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

std::uint64_t mask_hash(const Mask& mask);

/// Ticket lock: waiters acquire in arrival order, so requests on one session
/// are applied in the order they reached it.
class FifoMutex {
 public:
  void lock();
  void unlock();

 private:
  std::mutex mutex_;
  std::condition_variable turn_;
  std::uint64_t next_ = 0;
  std::uint64_t serving_ = 0;
};

/// In-memory session registry. Each session is guarded by its own mutex, so
/// clicks on one session are serialized while other sessions proceed.
class SessionStore {
 public:
  explicit SessionStore(ServiceOptions options);

  struct Session {
    FifoMutex mutex;
    SessionContext ctx;
    Segmentation current;
    std::chrono::steady_clock::time_point last_access;

    explicit Session(SessionContext c);
  };

  std::string create(SessionContext ctx);
  /// Throws HttpError(404) for unknown or expired ids.
  std::shared_ptr<Session> get(const std::string& id);
  bool erase(const std::string& id);
  std::size_t size();
  const ServiceOptions& options() const noexcept { return options_; }

 private:
  void purge_expired_locked();

  ServiceOptions options_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_;
};

/// Registers every route of the JSON API on `server`:
///   POST   /sessions                 multipart: image + (attention | synthetic) or demo
///   POST   /sessions/{id}/clicks     {"x","y","label"}
///   POST   /sessions/{id}/undo
///   GET    /sessions/{id}
///   GET    /sessions/{id}/mask.png
///   GET    /sessions/{id}/image.png
///   GET    /sessions/{id}/diagnostics
///   DELETE /sessions/{id}
///   GET    /healthz
void mount(httplib::Server& server, SessionStore& store);

}  // namespace m2n2::service
