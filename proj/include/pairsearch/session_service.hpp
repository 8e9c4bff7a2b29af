#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairsearch/embedding.hpp"
#include "pairsearch/session_state.hpp"

namespace pairsearch {

/// Error surfaced to API clients as {code, message} with an HTTP status.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

struct RegisteredEmbedding {
  std::string id;
  std::shared_ptr<const Embedding> embedding;
  /// Empty, or one display label (text or URL) per item.
  std::vector<std::string> labels;
  NoiseSchemeConfig scheme{NoiseScheme::constant, 10.0};
};

/// Read-only once the service starts.
class EmbeddingRegistry {
 public:
  void add(RegisteredEmbedding entry);
  /// Loads items (and an optional file with one label per line).
  void add_file(const std::string& id, const std::string& path, NoiseSchemeConfig scheme,
                const std::optional<std::string>& labels_path = std::nullopt, bool prepare = true);
  const RegisteredEmbedding* find(const std::string& id) const;
  const std::map<std::string, RegisteredEmbedding>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, RegisteredEmbedding> entries_;
};

struct CreateSessionRequest {
  std::string embedding_id;
  std::string strategy = "mcmv";
  double lambda = 1.0;
  /// Unset: min(1, 2000 / pool size).
  std::optional<double> beta;
  Index samples = kDefaultSampleCount;
  std::uint64_t seed = 0;
  double prior_half_width = 1.0;
};

CreateSessionRequest create_request_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CreateSessionRequest& r);

/// Append-only JSON-lines log of session events. An empty path keeps the
/// log in memory only.
class EventStore {
 public:
  explicit EventStore(std::filesystem::path path = {});
  void append(const nlohmann::json& event);
  std::vector<nlohmann::json> load() const;
  std::vector<nlohmann::json> events() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> memory_;
};

/// Live search sessions with a human (or script) as the oracle. Every state
/// change is logged; constructing a service over an existing log replays it,
/// so restarted sessions continue exactly where they stopped.
class SessionService {
 public:
  SessionService(std::shared_ptr<const EmbeddingRegistry> registry, std::filesystem::path store_path = {},
                 SamplerOptions sampler = {});

  nlohmann::json create_session(const nlohmann::json& request);
  /// Returns the pending pair, selecting one first if none is pending.
  nlohmann::json next_query(const std::string& session_id);
  nlohmann::json submit_response(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json get_estimate(const std::string& session_id) const;
  nlohmann::json list_embeddings() const;

  /// Answered (pair, response) sequence of a session, for replay checks.
  std::vector<Observation> history(const std::string& session_id) const;
  std::size_t session_count() const;
  const EventStore& store() const noexcept { return store_; }

 private:
  struct Session {
    std::string id;
    CreateSessionRequest request;
    std::string embedding_id;
    SessionState state;
    std::optional<PairQuery> pending;
    std::int64_t next_query_id = 1;
    std::vector<double> trace_history;
    std::vector<Vector> estimate_history;
    std::string created_at;
    std::string updated_at;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> build_session(const std::string& id, const CreateSessionRequest& req) const;
  nlohmann::json pair_payload(const Session& s) const;
  void propose_locked(Session& s);
  nlohmann::json respond_locked(Session& s, std::int64_t query_id, int choice);
  void replay();

  std::shared_ptr<const EmbeddingRegistry> registry_;
  SamplerOptions sampler_;
  EventStore store_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t created_ = 0;
  bool replaying_ = false;
};

/// Transport-free routing used by the HTTP server (and by tests).
struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

ApiResponse dispatch(SessionService& service, const std::string& method, const std::string& path,
                     const std::string& body);

/// Blocking HTTP front end over dispatch(). Implemented with cpp-httplib.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen_after_bind();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pairsearch
