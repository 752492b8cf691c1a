#pragma once

// Session persistence. The default FileStore keeps one directory per session:
//
//   <root>/sessions/<id>/meta.json          session metadata (written once)
//   <root>/sessions/<id>/input.log          uploaded bytes, verbatim
//   <root>/sessions/<id>/analysis.jsonl     one analyzed-line document per line
//   <root>/sessions/<id>/interactions.jsonl append-only interaction log
//   <root>/sessions/<id>/feedback.jsonl     append-only questionnaire answers
//   <root>/interactions.jsonl               requests naming no known session

#include "logxai/errors.hpp"
#include "logxai/logcore.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace logxai::service {

struct InteractionLogEntry {
  std::int64_t timestamp_ms = 0;
  std::string session_id;
  std::string endpoint;  // "<METHOD> <route template>"
  std::string request_digest;
  int http_status = 200;
  std::string outcome;  // "ok" or an error code
  std::string detail;

  friend bool operator==(const InteractionLogEntry&, const InteractionLogEntry&) = default;
};

inline void to_json(nlohmann::json& j, const InteractionLogEntry& e) {
  j = {{"timestamp_ms", e.timestamp_ms}, {"session_id", e.session_id},
       {"endpoint", e.endpoint},         {"request_digest", e.request_digest},
       {"http_status", e.http_status},   {"outcome", e.outcome},
       {"detail", e.detail}};
}

inline void from_json(const nlohmann::json& j, InteractionLogEntry& e) {
  j.at("timestamp_ms").get_to(e.timestamp_ms);
  j.at("session_id").get_to(e.session_id);
  j.at("endpoint").get_to(e.endpoint);
  j.at("request_digest").get_to(e.request_digest);
  j.at("http_status").get_to(e.http_status);
  j.at("outcome").get_to(e.outcome);
  e.detail = j.value("detail", "");
}

struct StoredSession {
  nlohmann::json meta;
  std::vector<InteractionLogEntry> interactions;
  std::vector<std::string> analysis_lines;  // raw JSON text, one per analyzed line
  std::size_t feedback_count = 0;
};

/// Document-store contract the service persists through.
class DocumentStore {
public:
  virtual ~DocumentStore() = default;

  virtual void create_session(const std::string& id, const nlohmann::json& meta,
                              std::string_view input) = 0;
  virtual std::string read_input(const std::string& id) const = 0;
  /// Replaces any previous analysis for the session in one step.
  virtual void write_analysis(const std::string& id, const std::vector<std::string>& lines) = 0;
  /// `id` empty: the store-wide log.
  virtual void append_interaction(const std::string& id, const InteractionLogEntry& e) = 0;
  virtual void append_feedback(const std::string& id, const nlohmann::json& feedback) = 0;
  virtual std::vector<std::string> session_ids() const = 0;
  virtual StoredSession load(const std::string& id) const = 0;
  virtual std::vector<InteractionLogEntry> store_interactions() const = 0;
};

class FileStore final : public DocumentStore {
public:
  explicit FileStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "sessions", ec);
    if (ec) throw IoError("cannot create store at '" + root_.string() + "': " + ec.message());
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  void create_session(const std::string& id, const nlohmann::json& meta,
                      std::string_view input) override {
    const auto dir = session_dir(id);
    std::error_code ec;
    if (!std::filesystem::create_directory(dir, ec) || ec)
      throw IoError("cannot create session directory '" + dir.string() + "'");
    write_whole(dir / "input.log", input);
    write_whole(dir / "meta.json", meta.dump() + "\n");
  }

  std::string read_input(const std::string& id) const override {
    return read_file((session_dir(id) / "input.log").string());
  }

  void write_analysis(const std::string& id, const std::vector<std::string>& lines) override {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    const auto dir = session_dir(id);
    const auto tmp = dir / "analysis.jsonl.tmp";
    write_whole(tmp, text);
    std::error_code ec;
    std::filesystem::rename(tmp, dir / "analysis.jsonl", ec);
    if (ec) throw IoError("cannot commit analysis for session " + id + ": " + ec.message());
  }

  void append_interaction(const std::string& id, const InteractionLogEntry& e) override {
    append_line(id.empty() ? root_ / "interactions.jsonl" : session_dir(id) / "interactions.jsonl",
                nlohmann::json(e).dump());
  }

  void append_feedback(const std::string& id, const nlohmann::json& feedback) override {
    append_line(session_dir(id) / "feedback.jsonl", feedback.dump());
  }

  std::vector<std::string> session_ids() const override {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "sessions"))
      if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.json"))
        ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  StoredSession load(const std::string& id) const override {
    const auto dir = session_dir(id);
    StoredSession s;
    try {
      s.meta = nlohmann::json::parse(read_file((dir / "meta.json").string()));
      for (const auto& line : read_lines(dir / "interactions.jsonl"))
        s.interactions.push_back(nlohmann::json::parse(line).get<InteractionLogEntry>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt session record " + id + ": " + e.what());
    }
    s.analysis_lines = read_lines(dir / "analysis.jsonl");
    s.feedback_count = read_lines(dir / "feedback.jsonl").size();
    return s;
  }

  std::vector<InteractionLogEntry> store_interactions() const override {
    std::vector<InteractionLogEntry> out;
    for (const auto& line : read_lines(root_ / "interactions.jsonl"))
      out.push_back(nlohmann::json::parse(line).get<InteractionLogEntry>());
    return out;
  }

private:
  std::filesystem::path session_dir(const std::string& id) const {
    return root_ / "sessions" / id;
  }

  static void write_whole(const std::filesystem::path& p, std::string_view data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + p.string() + "'");
  }

  static void append_line(const std::filesystem::path& p, const std::string& line) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to '" + p.string() + "'");
    out << line << '\n';
    out.flush();
    if (!out) throw IoError("append failed for '" + p.string() + "'");
  }

  static std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::vector<std::string> out;
    if (!std::filesystem::exists(p)) return out;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read '" + p.string() + "'");
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) out.push_back(std::move(line));
    return out;
  }

  std::filesystem::path root_;
};

} // namespace logxai::service
