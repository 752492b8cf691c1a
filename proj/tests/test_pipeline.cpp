#include "logxai/pipeline.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace logxai;

TEST(Pipeline, LineAnalysisIsConsistent) {
  const auto& ck = fixtures::small_model();
  const auto recs = parse_dataset_text(
      "Receiving block blk_-42 src: /10.0.0.1:50010 dest: /10.0.0.2:50010\n"
      "java.io.IOException: Connection reset by peer\n",
      DatasetFormat::raw_lines);
  PipelineOptions opt;
  opt.ig_steps = 32;
  for (const auto& r : recs) {
    const auto a = analyze_line(r, ck, reportgen::default_catalog(), opt);
    EXPECT_EQ(a.prediction.tokens, a.attribution.tokens);
    EXPECT_EQ(a.summary.saliency.scores.size(), a.prediction.tokens.size());
    EXPECT_EQ(a.response.verdict, a.prediction.label);
    EXPECT_EQ(a.report.text, reportgen::render_analysis_report(a.summary).text);
    const auto j = line_analysis_json(a);
    for (const char* key : {"line_no", "raw_text", "normalized_text", "prediction", "summary",
                            "attribution", "response", "response_text", "report_text"})
      EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j.at("line_no"), r.line_no);
  }
}

TEST(Pipeline, EvaluateModelOnHeldOutSplit) {
  const auto& ck = fixtures::small_model();
  const auto corpus = generate_synthetic_corpus(300, 300, 11);
  const auto split = split_dataset(corpus, {480, 60, 60}, 3);
  const auto report = evaluate_model(split.test, ck);
  EXPECT_GE(report.accuracy, 0.95);
  EXPECT_EQ(report.support.at(Label::normal) + report.support.at(Label::anomaly), 60u);
  EXPECT_EQ(predict_labels(split.test, ck).size(), 60u);
}
