#pragma once

// One log line through the whole chain: predict, analyze attention, attribute,
// and render. Shared by the CLI and the service so both produce identical output.

#include "logxai/attnlysis.hpp"
#include "logxai/encoder/attribution.hpp"
#include "logxai/encoder/checkpoint.hpp"
#include "logxai/encoder/train.hpp"
#include "logxai/logcore.hpp"
#include "logxai/metrics.hpp"
#include "logxai/reportgen.hpp"

#include "json.hpp"

#include <vector>

namespace logxai {

struct PipelineOptions {
  attnlysis::AnalysisConfig analysis;
  std::size_t ig_steps = 128;
};

struct LineAnalysis {
  LogRecord record;
  encoder::Prediction prediction;
  attnlysis::AnalysisSummary summary;
  encoder::TokenAttribution attribution;
  reportgen::DetectionResponse response;
  reportgen::ReportDocument report;
};

inline LineAnalysis analyze_line(const LogRecord& record, const encoder::Checkpoint& model,
                                 const reportgen::Catalog& catalog, const PipelineOptions& opt) {
  LineAnalysis out;
  out.record = record;
  out.prediction = encoder::predict(record.normalized_text, model.params, model.vocab);
  out.summary = attnlysis::analyze(out.prediction.attentions, out.prediction.tokens, opt.analysis);
  out.attribution =
      encoder::integrated_gradients(record.normalized_text, model.params, model.vocab, opt.ig_steps);
  out.response = reportgen::render_detection_response(out.prediction, record, catalog);
  out.report = reportgen::render_analysis_report(out.summary);
  return out;
}

/// The stored/served document for one analyzed line.
inline nlohmann::json line_analysis_json(const LineAnalysis& a) {
  return {{"line_no", a.record.line_no},
          {"raw_text", a.record.raw_text},
          {"normalized_text", a.record.normalized_text},
          {"prediction", a.prediction},
          {"summary", a.summary},
          {"attribution", a.attribution},
          {"response", a.response},
          {"response_text", reportgen::format_detection_response(a.response)},
          {"report_text", a.report.text}};
}

inline std::vector<Label> predict_labels(const std::vector<LogRecord>& records,
                                         const encoder::Checkpoint& model) {
  std::vector<Label> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back(encoder::predict(r.normalized_text, model.params, model.vocab).label);
  return out;
}

inline metrics::MetricsReport evaluate_model(const std::vector<LogRecord>& records,
                                             const encoder::Checkpoint& model) {
  std::vector<Label> truth;
  truth.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw ArgumentError("evaluation data must be labeled");
    truth.push_back(*r.label);
  }
  return metrics::evaluate(truth, predict_labels(records, model));
}

} // namespace logxai
