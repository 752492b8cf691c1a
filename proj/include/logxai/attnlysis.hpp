#pragma once

// Unified attention analysis: which tokens receive the most attention, which
// heads are most focused (lowest entropy), which layers stand out by mean
// inverse entropy, and whether any head is dominated by a special token.

#include "logxai/attention.hpp"
#include "logxai/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace logxai::attnlysis {

/// Additive constant inside the entropy log and the inverse-entropy denominator.
inline constexpr double entropy_epsilon = 1e-9;

struct AnalysisConfig {
  std::size_t top_k_tokens = 5;
  std::size_t top_k_heads = 3;
  std::size_t top_k_layers = 2;
  std::vector<std::string> special_tokens{"<s>", "</s>", "[CLS]", "[SEP]"};
  double bias_threshold = 0.5;

  void validate() const {
    if (top_k_tokens < 1 || top_k_heads < 1 || top_k_layers < 1)
      throw ConfigError("top_k values must be >= 1");
    if (!(bias_threshold > 0.0 && bias_threshold < 1.0))
      throw ConfigError("bias_threshold must lie in (0,1)");
  }
};

/// Presentation rounding; never applied to values that feed a ranking.
inline double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

struct TopToken {
  std::size_t position = 0;
  std::string token;
  double score = 0.0;  // rounded to 3 decimals
};

struct TokenSaliency {
  std::vector<double> scores;
  std::vector<TopToken> top_tokens;
};

struct HeadFocus {
  std::size_t layer = 0;
  std::size_t head = 0;
  double avg_entropy = 0.0;
};

struct LayerFocus {
  std::size_t layer = 0;
  double focus_score = 0.0;
};

struct BiasWarning {
  std::size_t layer = 0;
  std::size_t head = 0;
  std::string token;
  double avg_focus = 0.0;
};

struct AnalysisSummary {
  TokenSaliency saliency;
  std::vector<HeadFocus> focused_heads;
  std::vector<LayerFocus> standout_layers;
  std::vector<BiasWarning> bias_warnings;
};

namespace detail {

inline void check_tokens(const AttentionStack& att, const std::vector<std::string>& tokens) {
  if (tokens.size() != att.seq_len())
    throw ShapeError("token count " + std::to_string(tokens.size()) +
                     " does not match attention seq_len " + std::to_string(att.seq_len()));
}

/// Mean over query rows of one head's attention into each key position.
inline std::vector<double> column_means(const AttentionStack& att, std::size_t l, std::size_t h) {
  const std::size_t n = att.seq_len();
  const auto m = att.head(l, h);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += m[i * n + j];
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

inline double mean_row_entropy(const AttentionStack& att, std::size_t l, std::size_t h) {
  const std::size_t n = att.seq_len();
  const auto m = att.head(l, h);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = m[i * n + j];
      e -= p * std::log(p + entropy_epsilon);
    }
    total += e;
  }
  return total / static_cast<double>(n);
}

} // namespace detail

inline TokenSaliency token_saliency(const AttentionStack& att,
                                    const std::vector<std::string>& tokens,
                                    const AnalysisConfig& cfg) {
  detail::check_tokens(att, tokens);
  const std::size_t n = att.seq_len();
  TokenSaliency out;
  out.scores.assign(n, 0.0);
  for (std::size_t l = 0; l < att.layers(); ++l)
    for (std::size_t h = 0; h < att.heads(); ++h) {
      const auto cm = detail::column_means(att, l, h);
      for (std::size_t j = 0; j < n; ++j) out.scores[j] += cm[j];
    }
  const double heads_total = static_cast<double>(att.layers() * att.heads());
  for (double& s : out.scores) s /= heads_total;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.scores[a] > out.scores[b]; });
  order.resize(std::min(cfg.top_k_tokens, n));
  for (std::size_t pos : order) out.top_tokens.push_back({pos, tokens[pos], round3(out.scores[pos])});
  return out;
}

/// Every head, in (layer, head) order.
inline std::vector<HeadFocus> head_entropies(const AttentionStack& att, const AnalysisConfig&) {
  std::vector<HeadFocus> out;
  out.reserve(att.layers() * att.heads());
  for (std::size_t l = 0; l < att.layers(); ++l)
    for (std::size_t h = 0; h < att.heads(); ++h)
      out.push_back({l, h, detail::mean_row_entropy(att, l, h)});
  return out;
}

/// Mean over each layer's heads of 1/(avg_entropy + ε), in layer order. A one-hot
/// head's entropy is about −ε, so it is clamped at zero here to keep the sum finite.
/// Every layer must report heads 0..num_heads-1 exactly once.
inline std::vector<LayerFocus> layer_focus_scores(const std::vector<HeadFocus>& heads,
                                                  std::size_t num_heads, const AnalysisConfig&) {
  if (num_heads < 1) throw ShapeError("num_heads must be >= 1");
  std::map<std::size_t, std::vector<const HeadFocus*>> by_layer;
  for (const auto& h : heads) by_layer[h.layer].push_back(&h);
  std::vector<LayerFocus> out;
  for (const auto& [layer, members] : by_layer) {
    std::vector<bool> seen(num_heads, false);
    for (const auto* m : members) {
      if (m->head >= num_heads || seen[m->head])
        throw ShapeError("layer " + std::to_string(layer) + " has a duplicate or out-of-range head " +
                         std::to_string(m->head));
      seen[m->head] = true;
    }
    if (members.size() != num_heads)
      throw ShapeError("layer " + std::to_string(layer) + " has " + std::to_string(members.size()) +
                       " heads, expected " + std::to_string(num_heads));
    double total_focus = 0.0;
    for (const auto* m : members) total_focus += 1.0 / (std::max(m->avg_entropy, 0.0) + entropy_epsilon);
    out.push_back({layer, total_focus / static_cast<double>(num_heads)});
  }
  return out;
}

/// Per head, for each configured special token present (first occurrence),
/// warns when the mean attention it receives exceeds the threshold.
inline std::vector<BiasWarning> special_token_bias(const AttentionStack& att,
                                                   const std::vector<std::string>& tokens,
                                                   const AnalysisConfig& cfg) {
  detail::check_tokens(att, tokens);
  std::vector<std::pair<std::string, std::size_t>> present;
  for (const auto& special : cfg.special_tokens) {
    const auto it = std::find(tokens.begin(), tokens.end(), special);
    if (it != tokens.end()) present.emplace_back(special, static_cast<std::size_t>(it - tokens.begin()));
  }
  std::vector<BiasWarning> out;
  for (std::size_t l = 0; l < att.layers(); ++l)
    for (std::size_t h = 0; h < att.heads(); ++h) {
      if (present.empty()) continue;
      const auto cm = detail::column_means(att, l, h);
      for (const auto& [token, idx] : present)
        if (cm[idx] > cfg.bias_threshold) out.push_back({l, h, token, cm[idx]});
    }
  return out;
}

inline AnalysisSummary analyze(const AttentionStack& att, const std::vector<std::string>& tokens,
                               const AnalysisConfig& cfg) {
  cfg.validate();
  detail::check_tokens(att, tokens);
  AnalysisSummary s;
  s.saliency = token_saliency(att, tokens, cfg);

  s.focused_heads = head_entropies(att, cfg);
  s.standout_layers = layer_focus_scores(s.focused_heads, att.heads(), cfg);
  std::stable_sort(s.focused_heads.begin(), s.focused_heads.end(),
                   [](const HeadFocus& a, const HeadFocus& b) { return a.avg_entropy < b.avg_entropy; });
  s.focused_heads.resize(std::min(cfg.top_k_heads, s.focused_heads.size()));
  std::stable_sort(s.standout_layers.begin(), s.standout_layers.end(),
                   [](const LayerFocus& a, const LayerFocus& b) { return a.focus_score > b.focus_score; });
  s.standout_layers.resize(std::min(cfg.top_k_layers, s.standout_layers.size()));

  s.bias_warnings = special_token_bias(att, tokens, cfg);
  return s;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const TopToken& t) {
  j = {{"position", t.position}, {"token", t.token}, {"score", t.score}};
}
inline void from_json(const nlohmann::json& j, TopToken& t) {
  j.at("position").get_to(t.position);
  j.at("token").get_to(t.token);
  j.at("score").get_to(t.score);
}
inline void to_json(nlohmann::json& j, const TokenSaliency& t) {
  j = {{"scores", t.scores}, {"top_tokens", t.top_tokens}};
}
inline void from_json(const nlohmann::json& j, TokenSaliency& t) {
  j.at("scores").get_to(t.scores);
  j.at("top_tokens").get_to(t.top_tokens);
}
inline void to_json(nlohmann::json& j, const HeadFocus& h) {
  j = {{"layer", h.layer}, {"head", h.head}, {"avg_entropy", h.avg_entropy}};
}
inline void from_json(const nlohmann::json& j, HeadFocus& h) {
  j.at("layer").get_to(h.layer);
  j.at("head").get_to(h.head);
  j.at("avg_entropy").get_to(h.avg_entropy);
}
inline void to_json(nlohmann::json& j, const LayerFocus& l) {
  j = {{"layer", l.layer}, {"focus_score", l.focus_score}};
}
inline void from_json(const nlohmann::json& j, LayerFocus& l) {
  j.at("layer").get_to(l.layer);
  j.at("focus_score").get_to(l.focus_score);
}
inline void to_json(nlohmann::json& j, const BiasWarning& b) {
  j = {{"layer", b.layer}, {"head", b.head}, {"token", b.token}, {"avg_focus", b.avg_focus}};
}
inline void from_json(const nlohmann::json& j, BiasWarning& b) {
  j.at("layer").get_to(b.layer);
  j.at("head").get_to(b.head);
  j.at("token").get_to(b.token);
  j.at("avg_focus").get_to(b.avg_focus);
}
inline void to_json(nlohmann::json& j, const AnalysisSummary& s) {
  j = {{"saliency", s.saliency},
       {"focused_heads", s.focused_heads},
       {"standout_layers", s.standout_layers},
       {"bias_warnings", s.bias_warnings}};
}
inline void from_json(const nlohmann::json& j, AnalysisSummary& s) {
  j.at("saliency").get_to(s.saliency);
  j.at("focused_heads").get_to(s.focused_heads);
  j.at("standout_layers").get_to(s.standout_layers);
  j.at("bias_warnings").get_to(s.bias_warnings);
}

} // namespace logxai::attnlysis
