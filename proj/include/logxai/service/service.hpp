#pragma once

// Endpoint logic behind the HTTP facade: upload → session id → analyze →
// results / per-line attention / per-line report → feedback. Every call is
// recorded in the interaction log, and session status is rebuilt from that
// log on restart.

#include "logxai/pipeline.hpp"
#include "logxai/service/config.hpp"
#include "logxai/service/store.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace logxai::service {

enum class SessionStatus { uploaded, analyzing, done, failed };

inline constexpr std::string_view to_string(SessionStatus s) noexcept {
  switch (s) {
  case SessionStatus::uploaded: return "Uploaded";
  case SessionStatus::analyzing: return "Analyzing";
  case SessionStatus::done: return "Done";
  case SessionStatus::failed: break;
  }
  return "Failed";
}

struct Session {
  std::string session_id;
  std::string created_at;
  std::string source_filename;
  SessionStatus status = SessionStatus::uploaded;
  std::size_t line_count = 0;
};

inline nlohmann::json session_json(const Session& s) {
  return {{"session_id", s.session_id},
          {"created_at", s.created_at},
          {"source_filename", s.source_filename},
          {"status", std::string(to_string(s.status))},
          {"line_count", s.line_count}};
}

/// Endpoint names as recorded in the interaction log.
namespace endpoint {
inline constexpr std::string_view create = "POST /sessions";
inline constexpr std::string_view analyze = "POST /sessions/{id}/analyze";
inline constexpr std::string_view session = "GET /sessions/{id}";
inline constexpr std::string_view results = "GET /sessions/{id}/results";
inline constexpr std::string_view attention = "GET /sessions/{id}/lines/{n}/attention";
inline constexpr std::string_view report = "GET /sessions/{id}/lines/{n}/report";
inline constexpr std::string_view feedback = "POST /feedback";
} // namespace endpoint

struct ReplayedState {
  SessionStatus status = SessionStatus::uploaded;
  std::size_t feedback_count = 0;
  friend bool operator==(const ReplayedState&, const ReplayedState&) = default;
};

/// Session state implied by its interaction log; nullopt if it was never created.
inline std::optional<ReplayedState> replay(const std::vector<InteractionLogEntry>& log) {
  std::optional<ReplayedState> st;
  for (const auto& e : log) {
    if (e.endpoint == endpoint::create && e.outcome == "ok") {
      st = ReplayedState{};
    } else if (!st) {
      continue;
    } else if (e.endpoint == endpoint::analyze) {
      if (e.outcome == "ok")
        st->status = SessionStatus::done;
      else if (e.outcome == "analysis_failed")
        st->status = SessionStatus::failed;
    } else if (e.endpoint == endpoint::feedback && e.outcome == "ok") {
      ++st->feedback_count;
    }
  }
  return st;
}

struct Response {
  int status = 200;
  nlohmann::json body;
};

namespace detail {

inline Response error(int status, std::string code, std::string message) {
  return {status, {{"code", std::move(code)}, {"message", std::move(message)}}};
}

inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline std::string iso8601(std::int64_t ms) {
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

inline std::string new_uuid() {
  static std::mutex mu;
  static std::mt19937_64 rng{[] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(), static_cast<unsigned>(now_ms())};
    return std::mt19937_64(seq);
  }()};
  std::uint64_t hi, lo;
  {
    std::lock_guard lock(mu);
    hi = rng();
    lo = rng();
  }
  hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;  // version 4
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // RFC 4122 variant
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi >> 32),
                static_cast<unsigned long long>((hi >> 16) & 0xffff),
                static_cast<unsigned long long>(hi & 0xffff),
                static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80)
      extra = 0;
    else if ((c >> 5) == 0x6 && c >= 0xc2)
      extra = 1;
    else if ((c >> 4) == 0xe)
      extra = 2;
    else if ((c >> 3) == 0x1e && c <= 0xf4)
      extra = 3;
    else
      return false;
    if (extra && i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    // Overlong forms, UTF-16 surrogates and code points past U+10FFFF.
    const auto c1 = extra ? static_cast<unsigned char>(s[i + 1]) : 0;
    if ((c == 0xe0 && c1 < 0xa0) || (c == 0xed && c1 > 0x9f) || (c == 0xf0 && c1 < 0x90) ||
        (c == 0xf4 && c1 > 0x8f))
      return false;
    i += extra + 1;
  }
  return true;
}

} // namespace detail

class Service {
public:
  Service(ServiceConfig config, std::shared_ptr<DocumentStore> store,
          std::optional<encoder::Checkpoint> model, reportgen::Catalog catalog,
          Questionnaire questionnaire, attnlysis::AnalysisConfig analysis = {})
      : config_(std::move(config)), store_(std::move(store)), catalog_(std::move(catalog)),
        questionnaire_(std::move(questionnaire)) {
    if (model) model_ = std::make_shared<const encoder::Checkpoint>(std::move(*model));
    pipeline_.analysis = std::move(analysis);
    pipeline_.ig_steps = config_.ig_steps;
    restore();
  }

  bool has_model() const noexcept { return model_ != nullptr; }
  const ServiceConfig& config() const noexcept { return config_; }
  const Questionnaire& questionnaire() const noexcept { return questionnaire_; }

  // -------------------------------------------------------------------------
  // Endpoints

  Response create_session(std::string_view body, std::string filename) {
    const std::string digest = digest_of(endpoint::create, body);
    auto fail = [&](Response r) {
      log_store(endpoint::create, digest, r);
      return r;
    };
    if (body.empty()) return fail(detail::error(400, "empty_upload", "uploaded file is empty"));
    if (body.size() > config_.max_upload_bytes)
      return fail(detail::error(413, "payload_too_large",
                                "upload of " + std::to_string(body.size()) + " bytes exceeds the " +
                                    std::to_string(config_.max_upload_bytes) + "-byte limit"));
    if (!detail::valid_utf8(body))
      return fail(detail::error(400, "invalid_encoding", "upload is not valid UTF-8"));
    const auto records = parse_dataset_text(body, DatasetFormat::raw_lines);
    if (records.empty())
      return fail(detail::error(400, "empty_upload", "upload contains no log lines"));
    if (filename.empty()) filename = "upload.log";

    auto slot = std::make_shared<Slot>();
    const std::int64_t ts = detail::now_ms();
    slot->info = {detail::new_uuid(), detail::iso8601(ts), filename, SessionStatus::uploaded,
                  records.size()};
    const std::string id = slot->info.session_id;
    try {
      std::unique_lock lock(sessions_mu_);
      if (sessions_.contains(id)) return fail(detail::error(500, "store_error", "session id collision"));
      store_->create_session(id,
                             {{"session_id", id},
                              {"created_at", slot->info.created_at},
                              {"source_filename", filename},
                              {"line_count", records.size()}},
                             body);
      sessions_.emplace(id, slot);
    } catch (const Error& e) {
      return fail(detail::error(500, "store_error", e.what()));
    }
    Response ok{201, session_json(slot->info)};
    log_session(*slot, endpoint::create, digest, ok);
    return ok;
  }

  Response analyze_session(const std::string& id) {
    const std::string digest = digest_of(endpoint::analyze, id);
    auto slot = find(id);
    if (!slot) return unknown_session(endpoint::analyze, digest, id);
    if (!model_) {
      Response r = detail::error(503, "model_unavailable", "no trained model checkpoint is loaded");
      log_session(*slot, endpoint::analyze, digest, r);
      return r;
    }
    {
      std::lock_guard lock(slot->mu);
      if (slot->info.status != SessionStatus::uploaded) {
        Response r = detail::error(409, "conflict",
                                   "session is " + std::string(to_string(slot->info.status)) +
                                       "; analysis requires status Uploaded");
        log_locked(*slot, endpoint::analyze, digest, r);
        return r;
      }
      slot->info.status = SessionStatus::analyzing;
    }

    auto lines = std::make_shared<std::vector<nlohmann::json>>();
    std::string failure;
    try {
      const auto records = parse_dataset_text(store_->read_input(id), DatasetFormat::raw_lines);
      std::vector<std::string> dumped;
      dumped.reserve(records.size());
      for (const auto& rec : records) {
        try {
          auto doc = line_analysis_json(analyze_line(rec, *model_, catalog_, pipeline_));
          doc["session_id"] = id;
          dumped.push_back(doc.dump());
        } catch (const std::exception& e) {
          throw Error(ErrorKind::data, "line " + std::to_string(rec.line_no) + ": " + e.what());
        }
      }
      store_->write_analysis(id, dumped);
      // Serve exactly what a restarted service would read back.
      for (const auto& d : dumped) lines->push_back(nlohmann::json::parse(d));
    } catch (const std::exception& e) {
      failure = e.what();
    }

    std::lock_guard lock(slot->mu);
    if (!failure.empty()) {
      slot->info.status = SessionStatus::failed;
      Response r = detail::error(500, "analysis_failed", failure);
      log_locked(*slot, endpoint::analyze, digest, r, failure);
      return r;
    }
    slot->lines = std::move(lines);
    slot->info.status = SessionStatus::done;
    Response r{200, results_body(*slot)};
    log_locked(*slot, endpoint::analyze, digest, r);
    return r;
  }

  Response get_session(const std::string& id) {
    const std::string digest = digest_of(endpoint::session, id);
    auto slot = find(id);
    if (!slot) return unknown_session(endpoint::session, digest, id);
    std::lock_guard lock(slot->mu);
    Response r{200, session_json(slot->info)};
    log_locked(*slot, endpoint::session, digest, r);
    return r;
  }

  Response get_results(const std::string& id) {
    const std::string digest = digest_of(endpoint::results, id);
    auto slot = find(id);
    if (!slot) return unknown_session(endpoint::results, digest, id);
    std::lock_guard lock(slot->mu);
    Response r = slot->info.status == SessionStatus::done ? Response{200, results_body(*slot)}
                                                          : not_done(slot->info);
    log_locked(*slot, endpoint::results, digest, r);
    return r;
  }

  Response get_line_attention(const std::string& id, std::size_t line_no) {
    return line_endpoint(endpoint::attention, id, line_no, [&](const nlohmann::json& doc) {
      const auto& pred = doc.at("prediction");
      const auto& att = pred.at("attentions");
      return nlohmann::json{{"session_id", id},
                            {"line_no", line_no},
                            {"tokens", pred.at("tokens")},
                            {"dims", att.at("dims")},
                            {"attentions", att.at("attentions")}};
    });
  }

  Response get_line_report(const std::string& id, std::size_t line_no) {
    return line_endpoint(endpoint::report, id, line_no, [&](const nlohmann::json& doc) {
      return nlohmann::json{{"session_id", id},
                            {"line_no", line_no},
                            {"report_text", doc.at("report_text")},
                            {"summary", doc.at("summary")},
                            {"attribution", doc.at("attribution")},
                            {"response", doc.at("response")},
                            {"response_text", doc.at("response_text")}};
    });
  }

  Response post_feedback(std::string_view body) {
    const std::string digest = digest_of(endpoint::feedback, body);
    nlohmann::json fb;
    try {
      fb = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      Response r = detail::error(400, "bad_request", "feedback body is not valid JSON");
      log_store(endpoint::feedback, digest, r);
      return r;
    }
    const std::string id =
        fb.is_object() && fb.contains("session_id") && fb["session_id"].is_string()
            ? fb["session_id"].get<std::string>()
            : std::string();
    auto slot = id.empty() ? nullptr : find(id);
    if (!slot) {
      Response r = id.empty() ? detail::error(400, "bad_request", "feedback needs a session_id")
                              : detail::error(404, "not_found", "unknown session " + id);
      log_store(endpoint::feedback, digest, r);
      return r;
    }
    std::string problem = validate_feedback(fb);
    std::lock_guard lock(slot->mu);
    if (!problem.empty()) {
      Response r = detail::error(400, "bad_request", problem);
      log_locked(*slot, endpoint::feedback, digest, r);
      return r;
    }
    nlohmann::json record = fb;
    record["received_at"] = detail::iso8601(detail::now_ms());
    try {
      store_->append_feedback(id, record);
    } catch (const Error& e) {
      Response r = detail::error(500, "store_error", e.what());
      log_locked(*slot, endpoint::feedback, digest, r);
      return r;
    }
    ++slot->feedback_count;
    Response r{201, {{"status", "recorded"}, {"session_id", id}}};
    log_locked(*slot, endpoint::feedback, digest, r);
    return r;
  }

  // -------------------------------------------------------------------------
  // Introspection

  std::optional<Session> session(const std::string& id) const {
    auto slot = find(id);
    if (!slot) return std::nullopt;
    std::lock_guard lock(slot->mu);
    return slot->info;
  }

  std::optional<ReplayedState> live_state(const std::string& id) const {
    auto slot = find(id);
    if (!slot) return std::nullopt;
    std::lock_guard lock(slot->mu);
    return ReplayedState{slot->info.status, slot->feedback_count};
  }

  std::vector<InteractionLogEntry> interactions(const std::string& id) const {
    auto slot = find(id);
    if (!slot) return {};
    std::lock_guard lock(slot->mu);
    return slot->log;
  }

private:
  struct Slot {
    mutable std::mutex mu;
    Session info;
    std::shared_ptr<const std::vector<nlohmann::json>> lines;
    std::vector<InteractionLogEntry> log;
    std::int64_t last_ts = 0;
    std::size_t feedback_count = 0;
  };

  void restore() {
    for (const auto& id : store_->session_ids()) {
      StoredSession s = store_->load(id);
      auto slot = std::make_shared<Slot>();
      const auto state = replay(s.interactions);
      slot->info.session_id = s.meta.at("session_id").get<std::string>();
      slot->info.created_at = s.meta.at("created_at").get<std::string>();
      slot->info.source_filename = s.meta.at("source_filename").get<std::string>();
      slot->info.line_count = s.meta.at("line_count").get<std::size_t>();
      slot->info.status = state ? state->status : SessionStatus::uploaded;
      slot->feedback_count = s.feedback_count;
      slot->log = std::move(s.interactions);
      for (const auto& e : slot->log) slot->last_ts = std::max(slot->last_ts, e.timestamp_ms);
      if (slot->info.status == SessionStatus::done) {
        auto lines = std::make_shared<std::vector<nlohmann::json>>();
        for (const auto& l : s.analysis_lines) lines->push_back(nlohmann::json::parse(l));
        if (lines->size() != slot->info.line_count) slot->info.status = SessionStatus::failed;
        slot->lines = std::move(lines);
      }
      sessions_.emplace(id, std::move(slot));
    }
  }

  std::shared_ptr<Slot> find(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  static std::string digest_of(std::string_view ep, std::string_view payload) {
    std::string s(ep);
    s += '\n';
    s += payload;
    return detail::fnv1a_hex(s);
  }

  InteractionLogEntry make_entry(std::int64_t ts, const std::string& id, std::string_view ep,
                                 const std::string& digest, const Response& r,
                                 std::string detail_text) const {
    InteractionLogEntry e;
    e.timestamp_ms = ts;
    e.session_id = id;
    e.endpoint = std::string(ep);
    e.request_digest = digest;
    e.http_status = r.status;
    e.outcome = r.status < 400 ? "ok" : r.body.value("code", "error");
    e.detail = std::move(detail_text);
    return e;
  }

  // Caller holds slot.mu.
  void log_locked(Slot& slot, std::string_view ep, const std::string& digest, const Response& r,
                  std::string detail_text = {}) {
    slot.last_ts = std::max(slot.last_ts, detail::now_ms());
    auto e = make_entry(slot.last_ts, slot.info.session_id, ep, digest, r, std::move(detail_text));
    std::lock_guard log_lock(log_mu_);
    try {
      store_->append_interaction(slot.info.session_id, e);
    } catch (const Error&) {
      // The response already went out; the in-memory log still records it.
    }
    slot.log.push_back(std::move(e));
  }

  void log_session(Slot& slot, std::string_view ep, const std::string& digest, const Response& r) {
    std::lock_guard lock(slot.mu);
    log_locked(slot, ep, digest, r);
  }

  void log_store(std::string_view ep, const std::string& digest, const Response& r) {
    std::lock_guard log_lock(log_mu_);
    store_last_ts_ = std::max(store_last_ts_, detail::now_ms());
    try {
      store_->append_interaction({}, make_entry(store_last_ts_, {}, ep, digest, r, {}));
    } catch (const Error&) {
    }
  }

  Response unknown_session(std::string_view ep, const std::string& digest, const std::string& id) {
    Response r = detail::error(404, "not_found", "unknown session " + id);
    log_store(ep, digest, r);
    return r;
  }

  static Response not_done(const Session& s) {
    return detail::error(409, "conflict",
                         "session is " + std::string(to_string(s.status)) +
                             "; results are available once it is Done");
  }

  template <typename Build>
  Response line_endpoint(std::string_view ep, const std::string& id, std::size_t line_no,
                         Build&& build) {
    const std::string digest = digest_of(ep, id + "/" + std::to_string(line_no));
    auto slot = find(id);
    if (!slot) return unknown_session(ep, digest, id);
    std::lock_guard lock(slot->mu);
    Response r;
    if (slot->info.status != SessionStatus::done)
      r = not_done(slot->info);
    else if (line_no < 1 || !slot->lines || line_no > slot->lines->size())
      r = detail::error(404, "not_found", "session has no line " + std::to_string(line_no));
    else
      r = {200, build((*slot->lines)[line_no - 1])};
    log_locked(*slot, ep, digest, r);
    return r;
  }

  // Caller holds slot.mu.
  static nlohmann::json results_body(const Slot& slot) {
    nlohmann::json rows = nlohmann::json::array();
    std::size_t anomalies = 0;
    if (slot.lines)
      for (const auto& doc : *slot.lines) {
        const auto& resp = doc.at("response");
        if (resp.at("verdict") == "Anomaly") ++anomalies;
        rows.push_back({{"line_no", doc.at("line_no")},
                        {"verdict", resp.at("verdict")},
                        {"confidence", resp.at("confidence")},
                        {"severity", resp.at("severity")}});
      }
    return {{"session_id", slot.info.session_id},
            {"status", std::string(to_string(slot.info.status))},
            {"line_count", slot.info.line_count},
            {"anomaly_count", anomalies},
            {"results", std::move(rows)}};
  }

  std::string validate_feedback(const nlohmann::json& fb) const {
    for (const char* field : {"profession", "education"})
      if (!fb.contains(field) || !fb[field].is_string())
        return std::string("feedback field '") + field + "' must be a string";
    if (fb.contains("free_text") && !fb["free_text"].is_null() && !fb["free_text"].is_string())
      return "feedback field 'free_text' must be a string";
    if (!fb.contains("answers") || !fb["answers"].is_object())
      return "feedback field 'answers' must be an object of question_id -> choice";
    for (const auto& [qid, choice] : fb["answers"].items()) {
      const Question* q = questionnaire_.find(qid);
      if (!q) return "unknown question_id '" + qid + "'";
      if (!choice.is_string()) return "answer to '" + qid + "' must be a string";
      if (!q->choices.empty() &&
          std::find(q->choices.begin(), q->choices.end(), choice.get<std::string>()) ==
              q->choices.end())
        return "'" + choice.get<std::string>() + "' is not a valid choice for '" + qid + "'";
    }
    return {};
  }

  ServiceConfig config_;
  std::shared_ptr<DocumentStore> store_;
  std::shared_ptr<const encoder::Checkpoint> model_;
  reportgen::Catalog catalog_;
  Questionnaire questionnaire_;
  PipelineOptions pipeline_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::mutex log_mu_;
  std::int64_t store_last_ts_ = 0;
};

} // namespace logxai::service
