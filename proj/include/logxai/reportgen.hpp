#pragma once

// Deterministic text generation: detection responses from a keyword catalog,
// the four-section attention report, and readability scoring.

#include "logxai/attnlysis.hpp"
#include "logxai/encoder/train.hpp"
#include "logxai/errors.hpp"
#include "logxai/label.hpp"
#include "logxai/logcore.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace logxai::reportgen {

enum class Severity { low, medium, high };

inline constexpr std::string_view to_string(Severity s) noexcept {
  switch (s) {
  case Severity::high: return "High";
  case Severity::medium: return "Medium";
  case Severity::low: break;
  }
  return "Low";
}

/// High ≥ 0.9 > Medium ≥ 0.7 > Low.
inline Severity severity_for(double confidence) noexcept {
  if (confidence >= 0.9) return Severity::high;
  if (confidence >= 0.7) return Severity::medium;
  return Severity::low;
}

// ---------------------------------------------------------------------------
// Catalog

struct CatalogEntry {
  std::string name;
  std::vector<std::string> keywords;  // any keyword as a substring of the normalized line matches
  std::vector<std::string> causes;
  std::vector<std::string> actions;
};

struct Catalog {
  std::vector<CatalogEntry> rules;  // first match wins
  CatalogEntry fallback;

  const CatalogEntry& match(std::string_view normalized_line) const {
    for (const auto& r : rules)
      for (const auto& k : r.keywords)
        if (!k.empty() && normalized_line.find(k) != std::string_view::npos) return r;
    return fallback;
  }
};

inline Catalog catalog_from_json(const nlohmann::json& j) {
  auto entry = [](const nlohmann::json& e, std::string default_name) {
    CatalogEntry c;
    c.name = e.value("name", std::move(default_name));
    c.keywords = e.value("keywords", std::vector<std::string>{});
    c.causes = e.at("causes").get<std::vector<std::string>>();
    c.actions = e.at("actions").get<std::vector<std::string>>();
    if (c.causes.empty() || c.actions.empty())
      throw ConfigError("catalog entry '" + c.name + "' needs at least one cause and one action");
    return c;
  };
  try {
    Catalog cat;
    for (const auto& r : j.at("rules")) {
      cat.rules.push_back(entry(r, "rule"));
      if (cat.rules.back().keywords.empty())
        throw ConfigError("catalog rule '" + cat.rules.back().name + "' has no keywords");
    }
    cat.fallback = entry(j.at("default"), "default");
    return cat;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed catalog: ") + e.what());
  }
}

inline Catalog load_catalog(const std::string& path) {
  try {
    return catalog_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("catalog '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Built-in HDFS failure-mode catalog (mirrors data/catalog.json).
inline const Catalog& default_catalog() {
  static const Catalog cat = catalog_from_json(nlohmann::json::parse(R"json({
  "rules": [
    {"name": "connection_reset", "keywords": ["connection reset", "broken pipe"],
     "causes": ["Peer DataNode closed the connection during block transfer",
                "Network interruption between pipeline members"],
     "actions": ["Check network health between the affected DataNodes",
                 "Inspect the peer DataNode log around the same timestamp"]},
    {"name": "timeout", "keywords": ["timeout", "interrupted", "interruped"],
     "causes": ["Slow or overloaded DataNode in the write pipeline",
                "Network latency exceeding the socket timeout"],
     "actions": ["Review DataNode load and disk latency",
                 "Consider raising dfs.socket.timeout if the cluster is healthy"]},
    {"name": "corruption", "keywords": ["corrupt", "checksum"],
     "causes": ["On-disk block replica failed checksum verification",
                "Faulty disk or memory on the DataNode"],
     "actions": ["Run hdfs fsck on the affected path",
                 "Schedule re-replication and check the disk's SMART status"]},
    {"name": "write_failure", "keywords": ["write failed", "writeblock", "eofexception"],
     "causes": ["Block write pipeline broke before completion",
                "Mirror DataNode became unreachable"],
     "actions": ["Verify the mirror DataNode is alive",
                 "Check free space and volume health on the pipeline nodes"]},
    {"name": "missing_block", "keywords": ["not found", "redundant"],
     "causes": ["NameNode and DataNode block maps disagree",
                "Block deleted or reported twice during replication"],
     "actions": ["Compare the NameNode block map with the DataNode block report",
                 "Trigger a block report from the affected DataNode"]},
    {"name": "io_exception", "keywords": ["exception", "error", "failed"],
     "causes": ["I/O failure while serving or receiving a block"],
     "actions": ["Inspect the full stack trace in the DataNode log",
                 "Check disk and network health on the reporting node"]}
  ],
  "default": {
    "causes": ["Unrecognized failure pattern"],
    "actions": ["Escalate to an operator for manual review of the surrounding log context"]
  }
})json"));
  return cat;
}

// ---------------------------------------------------------------------------
// Detection responses

struct DetectionResponse {
  std::string event;
  Label verdict = Label::normal;
  Severity severity = Severity::low;
  std::vector<std::string> possible_causes;
  std::vector<std::string> recommended_actions;
  double confidence = 0.0;
};

inline DetectionResponse render_detection_response(const encoder::Prediction& pred,
                                                    const LogRecord& record,
                                                    const Catalog& catalog) {
  DetectionResponse r;
  r.event = record.normalized_text;
  r.verdict = pred.label;
  r.confidence = pred.confidence;
  if (pred.label == Label::anomaly) {
    r.severity = severity_for(pred.confidence);
    const auto& entry = catalog.match(record.normalized_text);
    r.possible_causes = entry.causes;
    r.recommended_actions = entry.actions;
  }
  return r;
}

/// Plain-language version of a response, as shown to the analyst.
inline std::string format_detection_response(const DetectionResponse& r) {
  char conf[32];
  std::snprintf(conf, sizeof conf, "%.1f%%", r.confidence * 100.0);
  std::string out;
  if (r.verdict == Label::normal) {
    out = "No anomaly detected. The event \"" + r.event +
          "\" matches normal operation with " + conf + " confidence.";
    return out;
  }
  out = "Anomaly detected with " + std::string(to_string(r.severity)) + " severity (" + conf +
        " confidence). The event \"" + r.event + "\" deviates from normal operation.";
  out += " Possible causes:";
  for (const auto& c : r.possible_causes) out += " " + c + ".";
  out += " Recommended actions:";
  for (const auto& a : r.recommended_actions) out += " " + a + ".";
  return out;
}

inline void to_json(nlohmann::json& j, const DetectionResponse& r) {
  j = {{"event", r.event},
       {"verdict", std::string(to_string(r.verdict))},
       {"severity", std::string(to_string(r.severity))},
       {"possible_causes", r.possible_causes},
       {"recommended_actions", r.recommended_actions},
       {"confidence", r.confidence}};
}

inline void from_json(const nlohmann::json& j, DetectionResponse& r) {
  r.event = j.at("event").get<std::string>();
  const auto v = label_from_string(j.at("verdict").get<std::string>());
  if (!v) throw ParseError("unknown verdict");
  r.verdict = *v;
  const auto s = j.at("severity").get<std::string>();
  r.severity = s == "High" ? Severity::high : s == "Medium" ? Severity::medium : Severity::low;
  j.at("possible_causes").get_to(r.possible_causes);
  j.at("recommended_actions").get_to(r.recommended_actions);
  j.at("confidence").get_to(r.confidence);
}

// ---------------------------------------------------------------------------
// Attention report

inline constexpr std::string_view heading_tokens = "Top Attended Tokens";
inline constexpr std::string_view heading_heads = "Most Focused Heads";
inline constexpr std::string_view heading_layers = "Standout Layers";
inline constexpr std::string_view heading_bias = "Special Token Bias Warnings";

struct ReportDocument {
  std::vector<std::pair<std::string, std::string>> sections;  // heading, body
  attnlysis::AnalysisSummary source_summary;
  std::string text;
};

namespace detail {
inline std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}
} // namespace detail

/// Sections in fixed order; numbers at exactly 3 decimals; "None" when there
/// are no bias warnings. Each body line is indented two spaces in `text`.
inline ReportDocument render_analysis_report(const attnlysis::AnalysisSummary& s) {
  using detail::fixed3;
  ReportDocument doc;
  doc.source_summary = s;
  auto join = [](const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? "\n" : "") + lines[i];
    return out;
  };

  std::vector<std::string> lines;
  for (const auto& t : s.saliency.top_tokens) lines.push_back(t.token + " (" + fixed3(t.score) + ")");
  doc.sections.emplace_back(heading_tokens, join(lines));

  lines.clear();
  for (const auto& h : s.focused_heads)
    lines.push_back("layer " + std::to_string(h.layer) + ", head " + std::to_string(h.head) +
                    ", entropy " + fixed3(h.avg_entropy));
  doc.sections.emplace_back(heading_heads, join(lines));

  lines.clear();
  for (const auto& l : s.standout_layers)
    lines.push_back("layer " + std::to_string(l.layer) + ", focus " + fixed3(l.focus_score));
  doc.sections.emplace_back(heading_layers, join(lines));

  lines.clear();
  for (const auto& b : s.bias_warnings)
    lines.push_back("Bias detected: layer " + std::to_string(b.layer) + ", head " +
                    std::to_string(b.head) + ", token " + b.token + ", avg focus " +
                    fixed3(b.avg_focus));
  doc.sections.emplace_back(heading_bias, lines.empty() ? std::string("None") : join(lines));

  for (const auto& [heading, body] : doc.sections) {
    doc.text += heading + ":\n";
    std::istringstream in(body);
    for (std::string line; std::getline(in, line);) doc.text += "  " + line + "\n";
  }
  return doc;
}

/// Values recovered from report text (at the report's 3-decimal precision).
struct ParsedReport {
  std::vector<std::pair<std::string, double>> top_tokens;
  std::vector<attnlysis::HeadFocus> heads;
  std::vector<attnlysis::LayerFocus> layers;
  std::vector<attnlysis::BiasWarning> warnings;
  std::vector<std::string> headings;
};

inline ParsedReport parse_analysis_report(std::string_view text) {
  ParsedReport out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  auto fail = [](const std::string& l) { throw ParseError("unrecognized report line: " + l); };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.starts_with("  ")) {
      if (!line.ends_with(":")) fail(line);
      section = line.substr(0, line.size() - 1);
      out.headings.push_back(section);
      continue;
    }
    const std::string body = line.substr(2);
    if (section == heading_tokens) {
      const auto open = body.rfind(" (");
      if (open == std::string::npos || !body.ends_with(")")) fail(line);
      out.top_tokens.emplace_back(body.substr(0, open),
                                  std::stod(body.substr(open + 2, body.size() - open - 3)));
    } else if (section == heading_heads) {
      attnlysis::HeadFocus h;
      if (std::sscanf(body.c_str(), "layer %zu, head %zu, entropy %lf", &h.layer, &h.head,
                      &h.avg_entropy) != 3)
        fail(line);
      out.heads.push_back(h);
    } else if (section == heading_layers) {
      attnlysis::LayerFocus l;
      if (std::sscanf(body.c_str(), "layer %zu, focus %lf", &l.layer, &l.focus_score) != 2)
        fail(line);
      out.layers.push_back(l);
    } else if (section == heading_bias) {
      if (body == "None") continue;
      attnlysis::BiasWarning b;
      const auto tok = body.find(", token ");
      const auto foc = body.rfind(", avg focus ");
      if (tok == std::string::npos || foc == std::string::npos ||
          std::sscanf(body.c_str(), "Bias detected: layer %zu, head %zu", &b.layer, &b.head) != 2)
        fail(line);
      b.token = body.substr(tok + 8, foc - tok - 8);
      b.avg_focus = std::stod(body.substr(foc + 12));
      out.warnings.push_back(b);
    } else {
      fail(line);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Readability

struct ReadabilityCounts {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t syllables = 0;
  std::size_t complex_words = 0;  // >= 3 syllables
  std::size_t polysyllables = 0;  // >= 3 syllables
};

struct ReadabilityScores {
  double flesch_reading_ease = 0.0;
  double flesch_kincaid_grade = 0.0;
  double gunning_fog = 0.0;
  double smog = 0.0;
  ReadabilityCounts counts;
};

inline void to_json(nlohmann::json& j, const ReadabilityScores& r) {
  j = {{"flesch_reading_ease", r.flesch_reading_ease},
       {"flesch_kincaid_grade", r.flesch_kincaid_grade},
       {"gunning_fog", r.gunning_fog},
       {"smog", r.smog},
       {"counts",
        {{"sentences", r.counts.sentences},
         {"words", r.counts.words},
         {"syllables", r.counts.syllables},
         {"complex_words", r.counts.complex_words},
         {"polysyllables", r.counts.polysyllables}}}};
}

namespace detail {

inline bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

} // namespace detail

/// Vowel-group count with a silent trailing 'e' dropped (kept for consonant + "le");
/// never less than 1.
inline std::size_t count_syllables(std::string_view word) {
  std::string w;
  for (char c : word)
    if (std::isalpha(static_cast<unsigned char>(c)))
      w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (w.empty()) return 1;
  std::size_t groups = 0;
  bool in_group = false;
  for (char c : w) {
    const bool v = detail::is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const std::size_t n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && !detail::is_vowel(w[n - 2])) {
    const bool consonant_le = n >= 3 && w[n - 2] == 'l' && !detail::is_vowel(w[n - 3]);
    if (!consonant_le && groups > 0) --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

inline ReadabilityCounts readability_counts(std::string_view text) {
  ReadabilityCounts c;
  bool words_since_boundary = false;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    const std::string_view chunk = text.substr(start, i - start);

    const bool has_alnum = std::any_of(chunk.begin(), chunk.end(), [](unsigned char ch) {
      return std::isalnum(ch) != 0;
    });
    if (has_alnum) {
      ++c.words;
      words_since_boundary = true;
      const std::size_t syl = count_syllables(chunk);
      c.syllables += syl;
      if (syl >= 3) {
        ++c.complex_words;
        ++c.polysyllables;
      }
    }
    // A terminator followed by whitespace or end of text closes a sentence.
    const char last = chunk.back();
    if ((last == '.' || last == '!' || last == '?') && words_since_boundary) {
      ++c.sentences;
      words_since_boundary = false;
    }
  }
  if (words_since_boundary) ++c.sentences;  // unterminated trailing sentence
  return c;
}

inline ReadabilityScores readability_scores(std::string_view text) {
  ReadabilityScores r;
  r.counts = readability_counts(text);
  const auto& c = r.counts;
  if (c.sentences == 0 || c.words == 0)
    throw ArgumentError("readability needs at least one sentence and one word");
  const double wps = static_cast<double>(c.words) / static_cast<double>(c.sentences);
  const double spw = static_cast<double>(c.syllables) / static_cast<double>(c.words);
  r.flesch_reading_ease = 206.835 - 1.015 * wps - 84.6 * spw;
  r.flesch_kincaid_grade = 0.39 * wps + 11.8 * spw - 15.59;
  r.gunning_fog =
      0.4 * (wps + 100.0 * static_cast<double>(c.complex_words) / static_cast<double>(c.words));
  r.smog = 1.0430 * std::sqrt(static_cast<double>(c.polysyllables) * 30.0 /
                              static_cast<double>(c.sentences)) +
           3.1291;
  return r;
}

} // namespace logxai::reportgen
