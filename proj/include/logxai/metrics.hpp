#pragma once

#include "logxai/errors.hpp"
#include "logxai/label.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

namespace logxai::metrics {

/// Counts against an explicitly declared positive class.
struct ConfusionMatrix {
  Label positive = Label::anomaly;
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }

  /// The same predictions viewed with the other class as positive.
  ConfusionMatrix flipped() const noexcept {
    return {positive == Label::anomaly ? Label::normal : Label::anomaly, tn, tp, fn, fp};
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline ConfusionMatrix confusion_from_predictions(const std::vector<Label>& truth,
                                                  const std::vector<Label>& pred, Label positive) {
  if (truth.size() != pred.size())
    throw ShapeError("truth has " + std::to_string(truth.size()) + " labels, predictions " +
                     std::to_string(pred.size()));
  if (truth.empty()) throw ShapeError("no labels to compare");
  ConfusionMatrix cm{positive};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == positive;
    const bool guessed = pred[i] == positive;
    if (actual && guessed)
      ++cm.tp;
    else if (actual)
      ++cm.fn;
    else if (guessed)
      ++cm.fp;
    else
      ++cm.tn;
  }
  return cm;
}

namespace detail {
// 0/0 is reported as 0.
inline double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
} // namespace detail

inline ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ArgumentError("confusion matrix is empty");
  return {detail::ratio(cm.tp + cm.tn, cm.total()), detail::ratio(cm.tp, cm.tp + cm.fp),
          detail::ratio(cm.tp, cm.tp + cm.fn), detail::ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)};
}

struct Aggregate {
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

inline Aggregate aggregate(const std::map<Label, ClassMetrics>& per_class,
                           const std::map<Label, std::uint64_t>& support) {
  if (per_class.empty()) throw ArgumentError("no classes to aggregate");
  if (per_class.size() != support.size())
    throw ArgumentError("per-class metrics and support cover different classes");
  double f1_sum = 0.0, weighted = 0.0;
  std::uint64_t total = 0;
  for (const auto& [cls, m] : per_class) {
    const auto it = support.find(cls);
    if (it == support.end())
      throw ArgumentError("no support given for class " + std::string(to_string(cls)));
    f1_sum += m.f1;
    weighted += static_cast<double>(it->second) * m.f1;
    total += it->second;
  }
  if (total == 0) throw ArgumentError("total support is zero");
  return {f1_sum / static_cast<double>(per_class.size()), weighted / static_cast<double>(total)};
}

struct MetricsReport {
  std::map<Label, ClassMetrics> per_class;
  std::map<Label, std::uint64_t> support;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

/// Both class orientations of one binary confusion matrix.
inline MetricsReport report_from_confusion(const ConfusionMatrix& cm) {
  const ConfusionMatrix anomaly = cm.positive == Label::anomaly ? cm : cm.flipped();
  const ConfusionMatrix normal = anomaly.flipped();
  MetricsReport r;
  r.per_class[Label::anomaly] = class_metrics(anomaly);
  r.per_class[Label::normal] = class_metrics(normal);
  r.support[Label::anomaly] = anomaly.tp + anomaly.fn;
  r.support[Label::normal] = normal.tp + normal.fn;
  r.accuracy = r.per_class[Label::anomaly].accuracy;
  const auto agg = aggregate(r.per_class, r.support);
  r.macro_f1 = agg.macro_f1;
  r.weighted_f1 = agg.weighted_f1;
  return r;
}

inline MetricsReport evaluate(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  return report_from_confusion(confusion_from_predictions(truth, pred, Label::anomaly));
}

inline void to_json(nlohmann::json& j, const ClassMetrics& m) {
  j = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
  nlohmann::json per_class, support;
  for (const auto& [cls, m] : r.per_class) per_class[std::string(to_string(cls))] = m;
  for (const auto& [cls, n] : r.support) support[std::string(to_string(cls))] = n;
  j = {{"accuracy", r.accuracy},       {"per_class", per_class}, {"support", support},
       {"macro_f1", r.macro_f1},       {"weighted_f1", r.weighted_f1}};
}

/// Two aligned tables: (a) accuracy and Normal-class metrics, (b) Anomaly-class
/// metrics with macro and weighted F1. Accuracy at 4 decimals, the rest at 2.
inline std::string format_table(const std::string& model_name, const MetricsReport& r) {
  const auto& n = r.per_class.at(Label::normal);
  const auto& a = r.per_class.at(Label::anomaly);
  const int w = static_cast<int>(std::max<std::size_t>(model_name.size(), 5));
  char buf[512];
  std::string out = "(a) Performance on Normal class\n";
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %13s  %10s  %6s\n", w, "Model", "Accuracy",
                "Precision (N)", "Recall (N)", "F1 (N)");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %13.2f  %10.2f  %6.2f\n", w, model_name.c_str(),
                r.accuracy, n.precision, n.recall, n.f1);
  out += buf;
  out += "\n(b) Performance on Anomaly class and overall\n";
  std::snprintf(buf, sizeof buf, "%-*s  %13s  %10s  %6s  %8s  %11s\n", w, "Model", "Precision (A)",
                "Recall (A)", "F1 (A)", "Macro F1", "Weighted F1");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-*s  %13.2f  %10.2f  %6.2f  %8.2f  %11.2f\n", w,
                model_name.c_str(), a.precision, a.recall, a.f1, r.macro_f1, r.weighted_f1);
  out += buf;
  return out;
}

} // namespace logxai::metrics
