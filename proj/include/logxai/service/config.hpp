#pragma once

#include "logxai/errors.hpp"
#include "logxai/logcore.hpp"

#include "json.hpp"

#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace logxai::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store_path = "./logxai-store";
  std::string checkpoint_path;
  std::size_t max_upload_bytes = 4u << 20;
  std::string questionnaire_path;  // empty: built-in 12-question set
  std::string catalog_path;        // empty: built-in catalog
  std::size_t ig_steps = 128;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

/// Reads `path` (optional JSON file), then applies LOGXAI_* environment overrides:
/// HOST, PORT, STORE_PATH, CHECKPOINT, MAX_UPLOAD_BYTES, QUESTIONNAIRE, CATALOG, IG_STEPS.
inline ServiceConfig load_service_config(const std::string& path = {},
                                         const EnvLookup& env = process_env) {
  ServiceConfig c;
  if (!path.empty()) {
    try {
      const auto j = nlohmann::json::parse(read_file(path));
      c.host = j.value("host", c.host);
      c.port = j.value("port", c.port);
      c.store_path = j.value("store_path", c.store_path);
      c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
      c.max_upload_bytes = j.value("max_upload_bytes", c.max_upload_bytes);
      c.questionnaire_path = j.value("questionnaire_path", c.questionnaire_path);
      c.catalog_path = j.value("catalog_path", c.catalog_path);
      c.ig_steps = j.value("ig_steps", c.ig_steps);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("service config '" + path + "': " + e.what());
    }
  }
  auto number = [](const std::string& name, const std::string& v) -> long long {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used != v.size() || n < 0) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      throw ConfigError(name + " must be a non-negative integer, got '" + v + "'");
    }
  };
  if (auto v = env("LOGXAI_HOST")) c.host = *v;
  if (auto v = env("LOGXAI_PORT")) c.port = static_cast<int>(number("LOGXAI_PORT", *v));
  if (auto v = env("LOGXAI_STORE_PATH")) c.store_path = *v;
  if (auto v = env("LOGXAI_CHECKPOINT")) c.checkpoint_path = *v;
  if (auto v = env("LOGXAI_MAX_UPLOAD_BYTES"))
    c.max_upload_bytes = static_cast<std::size_t>(number("LOGXAI_MAX_UPLOAD_BYTES", *v));
  if (auto v = env("LOGXAI_QUESTIONNAIRE")) c.questionnaire_path = *v;
  if (auto v = env("LOGXAI_CATALOG")) c.catalog_path = *v;
  if (auto v = env("LOGXAI_IG_STEPS")) c.ig_steps = static_cast<std::size_t>(number("LOGXAI_IG_STEPS", *v));

  if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range");
  if (c.max_upload_bytes == 0) throw ConfigError("max_upload_bytes must be positive");
  if (c.ig_steps == 0) throw ConfigError("ig_steps must be >= 1");
  return c;
}

// ---------------------------------------------------------------------------
// Questionnaire

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> choices;  // empty: free choice
};

struct Questionnaire {
  std::vector<Question> questions;

  const Question* find(const std::string& id) const {
    for (const auto& q : questions)
      if (q.id == id) return &q;
    return nullptr;
  }
};

inline Questionnaire questionnaire_from_json(const nlohmann::json& j) {
  try {
    Questionnaire q;
    for (const auto& item : j.at("questions"))
      q.questions.push_back({item.at("id").get<std::string>(), item.value("text", ""),
                             item.value("choices", std::vector<std::string>{})});
    if (q.questions.empty()) throw ConfigError("questionnaire has no questions");
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed questionnaire: ") + e.what());
  }
}

inline Questionnaire load_questionnaire(const std::string& path) {
  try {
    return questionnaire_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("questionnaire '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Twelve usability/interpretability/trust items (mirrors data/questionnaire.json).
inline Questionnaire default_questionnaire() {
  Questionnaire q;
  const std::vector<std::string> useful{"very_useful", "useful", "neutral", "not_useful"};
  const std::vector<std::string> ynp{"yes", "partially", "no"};
  q.questions = {
      {"q1", "How easy was it to upload a log file and start an analysis?",
       {"very_easy", "easy", "neutral", "difficult", "very_difficult"}},
      {"q2", "How clear were the detection verdicts and severity levels?",
       {"very_clear", "clear", "neutral", "unclear", "very_unclear"}},
      {"q3", "Did the attention report help you understand why a line was flagged?", ynp},
      {"q4", "How useful was the head view for inspecting token-to-token attention?", useful},
      {"q5", "How useful was the model view grid of layers and heads?", useful},
      {"q6", "How useful was the word-level attribution chart?", useful},
      {"q7", "Were the possible causes and recommended actions actionable?", ynp},
      {"q8", "How much do you trust the system's anomaly verdicts?", {"high", "moderate", "low"}},
      {"q9", "Did the explanations increase your trust in the verdicts?", {"yes", "somewhat", "no"}},
      {"q10", "How responsive did the interface feel?", {"fast", "acceptable", "slow"}},
      {"q11", "Were errors and loading states communicated clearly?", ynp},
      {"q12", "Would you use this tool in your day-to-day log analysis?", {"yes", "maybe", "no"}},
  };
  return q;
}

} // namespace logxai::service
