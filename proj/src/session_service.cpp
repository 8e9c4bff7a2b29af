#include "pairsearch/session_service.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>

namespace pairsearch {

namespace {

std::string now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ServiceError bad_request(const std::string& message) { return {400, "bad_request", message}; }

}  // namespace

void EmbeddingRegistry::add(RegisteredEmbedding entry) {
  if (!entry.embedding) throw ArgumentError("registry entry has no embedding");
  if (!entry.labels.empty() && static_cast<Index>(entry.labels.size()) != entry.embedding->size()) {
    throw ArgumentError("label count does not match item count for " + entry.id);
  }
  const std::string id = entry.id;
  if (!entries_.emplace(id, std::move(entry)).second) throw ArgumentError("duplicate embedding id " + id);
}

void EmbeddingRegistry::add_file(const std::string& id, const std::string& path, NoiseSchemeConfig scheme,
                                 const std::optional<std::string>& labels_path, bool prepare) {
  Embedding e = load_embedding_file(path);
  if (prepare) e = prepare_embedding(e);
  RegisteredEmbedding entry{id, std::make_shared<const Embedding>(std::move(e)), {}, scheme};
  if (labels_path) {
    std::ifstream in(*labels_path);
    if (!in) throw ArgumentError("cannot open labels file " + *labels_path);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      entry.labels.push_back(line);
    }
    while (!entry.labels.empty() && entry.labels.back().empty() &&
           static_cast<Index>(entry.labels.size()) > entry.embedding->size()) {
      entry.labels.pop_back();
    }
  }
  add(std::move(entry));
}

const RegisteredEmbedding* EmbeddingRegistry::find(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

CreateSessionRequest create_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw bad_request("request body must be a JSON object");
  CreateSessionRequest r;
  try {
    if (!j.contains("embedding_id")) throw bad_request("embedding_id is required");
    r.embedding_id = j.at("embedding_id").get<std::string>();
    r.strategy = j.value("strategy", r.strategy);
    r.lambda = j.value("lambda", r.lambda);
    if (j.contains("beta") && !j.at("beta").is_null()) r.beta = j.at("beta").get<double>();
    r.samples = j.value("S", j.value("samples", r.samples));
    r.seed = j.value("seed", r.seed);
    r.prior_half_width = j.value("prior_half_width", r.prior_half_width);
  } catch (const nlohmann::json::exception& e) {
    throw bad_request(std::string("malformed request: ") + e.what());
  }
  StrategyConfig sc;
  try {
    sc.kind = parse_strategy_kind(r.strategy);
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  sc.lambda = r.lambda;
  sc.beta = r.beta.value_or(1.0);
  sc.samples = r.samples;
  try {
    validate(sc);
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  if (!(r.prior_half_width > 0.0)) throw bad_request("prior_half_width must be > 0");
  return r;
}

nlohmann::json to_json(const CreateSessionRequest& r) {
  nlohmann::json j{{"embedding_id", r.embedding_id}, {"strategy", r.strategy},         {"lambda", r.lambda},
                   {"S", r.samples},                {"seed", r.seed}, {"prior_half_width", r.prior_half_width}};
  j["beta"] = r.beta ? nlohmann::json(*r.beta) : nlohmann::json(nullptr);
  return j;
}

EventStore::EventStore(std::filesystem::path path) : path_(std::move(path)) {}

void EventStore::append(const nlohmann::json& event) {
  std::lock_guard lock(mutex_);
  memory_.push_back(event);
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to event store " + path_.string());
  out << event.dump() << '\n';
  out.flush();
}

std::vector<nlohmann::json> EventStore::load() const {
  std::vector<nlohmann::json> events;
  if (path_.empty() || !std::filesystem::exists(path_)) return events;
  std::ifstream in(path_, std::ios::binary);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception&) {
      throw FormatError("corrupt event store entry", line_no);
    }
  }
  return events;
}

std::vector<nlohmann::json> EventStore::events() const {
  std::lock_guard lock(mutex_);
  return memory_;
}

SessionService::SessionService(std::shared_ptr<const EmbeddingRegistry> registry, std::filesystem::path store_path,
                               SamplerOptions sampler)
    : registry_(std::move(registry)), sampler_(sampler), store_(std::move(store_path)) {
  replay();
}

void SessionService::replay() {
  replaying_ = true;
  for (const nlohmann::json& ev : store_.load()) {
    const std::string type = ev.at("type").get<std::string>();
    const std::string id = ev.at("session").get<std::string>();
    if (type == "create") {
      const CreateSessionRequest req = create_request_from_json(ev.at("request"));
      sessions_[id] = build_session(id, req);
      sessions_[id]->created_at = sessions_[id]->updated_at = ev.value("at", std::string());
      ++created_;
    } else if (type == "propose") {
      Session& s = *find(id);
      propose_locked(s);
      if (s.pending->p_index != ev.at("p_index").get<Index>() || s.pending->q_index != ev.at("q_index").get<Index>()) {
        throw Error("event store replay diverged for session " + id);
      }
    } else if (type == "respond") {
      Session& s = *find(id);
      respond_locked(s, ev.at("query_id").get<std::int64_t>(), ev.at("choice").get<int>());
      s.updated_at = ev.value("at", s.updated_at);
    } else {
      throw Error("unknown event type " + type);
    }
  }
  replaying_ = false;
}

std::shared_ptr<SessionService::Session> SessionService::build_session(const std::string& id,
                                                                        const CreateSessionRequest& req) const {
  const RegisteredEmbedding* entry = registry_->find(req.embedding_id);
  if (!entry) throw ServiceError(404, "unknown_embedding", "no embedding registered as " + req.embedding_id);
  auto pool = std::make_shared<const CandidatePool>(entry->embedding, entry->scheme);
  StrategyConfig sc;
  sc.kind = parse_strategy_kind(req.strategy);
  sc.lambda = req.lambda;
  sc.beta = req.beta.value_or(default_beta(pool->full_size()));
  sc.samples = req.samples;
  auto s = std::make_shared<Session>();
  s->id = id;
  s->request = req;
  s->embedding_id = req.embedding_id;
  s->state = init_session(std::move(pool), sc, req.seed, req.prior_half_width, sampler_);
  return s;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session " + id);
  return it->second;
}

nlohmann::json SessionService::create_session(const nlohmann::json& request) {
  const CreateSessionRequest req = create_request_from_json(request);
  if (!registry_->find(req.embedding_id)) {
    throw ServiceError(404, "unknown_embedding", "no embedding registered as " + req.embedding_id);
  }
  std::string id;
  {
    std::unique_lock lock(sessions_mutex_);
    const std::uint64_t n = ++created_;
    char buf[48];
    std::snprintf(buf, sizeof buf, "s%llu-%012llx", static_cast<unsigned long long>(n),
                  static_cast<unsigned long long>(derive_seed(req.seed, hash_label("session-id"), n) & 0xffffffffffffULL));
    id = buf;
  }
  auto s = build_session(id, req);
  s->created_at = s->updated_at = now_iso8601();
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_[id] = s;
  }
  store_.append({{"type", "create"}, {"session", id}, {"request", to_json(req)}, {"at", s->created_at}});
  return {{"session_id", id}, {"history_length", 0}};
}

void SessionService::propose_locked(Session& s) {
  if (s.pending) return;
  s.pending = propose_query(s.state);
}

nlohmann::json SessionService::pair_payload(const Session& s) const {
  const RegisteredEmbedding* entry = registry_->find(s.embedding_id);
  const PairQuery& pq = *s.pending;
  auto item = [&](Index idx, const Vector& coords) {
    nlohmann::json j{{"index", idx}, {"coordinates", vector_json(coords)}};
    if (entry && !entry->labels.empty()) j["label"] = entry->labels[static_cast<std::size_t>(idx)];
    return j;
  };
  return {{"query_id", s.next_query_id},
          {"pair", {{"p", item(pq.p_index.value_or(-1), pq.p)}, {"q", item(pq.q_index.value_or(-1), pq.q)}}}};
}

nlohmann::json SessionService::next_query(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (!s->pending) {
    propose_locked(*s);
    store_.append({{"type", "propose"},
                   {"session", session_id},
                   {"query_id", s->next_query_id},
                   {"p_index", s->pending->p_index.value_or(-1)},
                   {"q_index", s->pending->q_index.value_or(-1)}});
  }
  return pair_payload(*s);
}

nlohmann::json SessionService::respond_locked(Session& s, std::int64_t query_id, int choice) {
  if (!s.pending || query_id != s.next_query_id) {
    throw ServiceError(409, "stale_query", "query " + std::to_string(query_id) + " is not pending");
  }
  if (choice != 0 && choice != 1) throw bad_request("choice must be 0 (first item) or 1 (second item)");
  incorporate_response(s.state, *s.pending, choice);
  s.pending.reset();
  ++s.next_query_id;
  s.trace_history.push_back(s.state.batch.covariance().trace());
  s.estimate_history.push_back(s.state.estimate);
  return {{"estimate", vector_json(s.state.estimate)},
          {"history_length", s.state.history.size()},
          {"covariance_trace", s.trace_history.back()}};
}

nlohmann::json SessionService::submit_response(const std::string& session_id, const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("query_id") || !body.contains("choice")) {
    throw bad_request("body needs query_id and choice");
  }
  if (!body.at("query_id").is_number_integer()) throw bad_request("query_id must be an integer");
  if (!body.at("choice").is_number_integer()) throw bad_request("choice must be 0 or 1");
  const auto query_id = body.at("query_id").get<std::int64_t>();
  const auto choice = body.at("choice").get<std::int64_t>();
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (choice != 0 && choice != 1) throw bad_request("choice must be 0 or 1");
  nlohmann::json out = respond_locked(*s, query_id, static_cast<int>(choice));
  s->updated_at = now_iso8601();
  store_.append({{"type", "respond"},
                 {"session", session_id},
                 {"query_id", query_id},
                 {"choice", choice},
                 {"at", s->updated_at}});
  return out;
}

nlohmann::json SessionService::get_estimate(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const Matrix& cov = s->state.batch.covariance();
  nlohmann::json est_hist = nlohmann::json::array();
  for (const Vector& v : s->estimate_history) est_hist.push_back(vector_json(v));
  return {{"session_id", s->id},
          {"embedding_id", s->embedding_id},
          {"strategy", s->request.strategy},
          {"estimate", vector_json(s->state.estimate)},
          {"covariance_trace", cov.trace()},
          {"covariance_diagonal", vector_json(cov.diagonal())},
          {"history_length", s->state.history.size()},
          {"trace_history", s->trace_history},
          {"estimate_history", est_hist},
          {"pending_query_id", s->pending ? nlohmann::json(s->next_query_id) : nlohmann::json(nullptr)},
          {"created_at", s->created_at},
          {"updated_at", s->updated_at}};
}

nlohmann::json SessionService::list_embeddings() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, e] : registry_->entries()) {
    out.push_back({{"id", id},
                   {"items", e.embedding->size()},
                   {"dim", e.embedding->dim()},
                   {"has_labels", !e.labels.empty()},
                   {"scheme", std::string(to_string(e.scheme.scheme))},
                   {"k0", e.scheme.k0}});
  }
  return {{"embeddings", out}};
}

std::vector<Observation> SessionService::history(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->state.history.entries();
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

ApiResponse dispatch(SessionService& service, const std::string& method, const std::string& path,
                     const std::string& body) {
  static const std::regex session_route(R"(^/sessions/([A-Za-z0-9_-]+)/(query|responses|estimate)$)");
  auto parse_body = [&]() {
    try {
      return body.empty() ? nlohmann::json::object() : nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw bad_request("body is not valid JSON");
    }
  };
  try {
    if (path == "/embeddings") {
      if (method != "GET") throw ServiceError(405, "method_not_allowed", "use GET");
      return {200, service.list_embeddings()};
    }
    if (path == "/sessions") {
      if (method != "POST") throw ServiceError(405, "method_not_allowed", "use POST");
      return {201, service.create_session(parse_body())};
    }
    std::smatch m;
    if (std::regex_match(path, m, session_route)) {
      const std::string id = m[1];
      const std::string what = m[2];
      if (what == "query" && method == "GET") return {200, service.next_query(id)};
      if (what == "responses" && method == "POST") return {200, service.submit_response(id, parse_body())};
      if (what == "estimate" && method == "GET") return {200, service.get_estimate(id)};
      throw ServiceError(405, "method_not_allowed", method + " not allowed on " + path);
    }
    throw ServiceError(404, "not_found", "no route " + path);
  } catch (const ServiceError& e) {
    return {e.status(), {{"code", e.code()}, {"message", e.what()}}};
  } catch (const ArgumentError& e) {
    return {400, {{"code", "bad_request"}, {"message", e.what()}}};
  } catch (const Error& e) {
    return {500, {{"code", "internal"}, {"message", e.what()}}};
  }
}

}  // namespace pairsearch
