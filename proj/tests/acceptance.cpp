// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "logxai/pipeline.hpp"
#include "logxai/service/service.hpp"

#include "fixtures.hpp"
#include "oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace logxai;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-34s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct RandomCase {
  AttentionStack stack;
  std::vector<std::string> tokens;
};

std::vector<RandomCase> random_cases(std::size_t count) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> dim(1, 3), len(1, 6);
  std::vector<RandomCase> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t L = dim(rng), H = dim(rng), n = len(rng);
    out.push_back({oracle::random_stack(rng, L, H, n), oracle::random_tokens(rng, n)});
  }
  return out;
}

AttentionStack constant_stack(std::size_t n, bool one_hot) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, one_hot ? 0.0 : 1.0 / n));
  if (one_hot)
    for (std::size_t i = 0; i < n; ++i) rows[i][(i * 3 + 1) % n] = 1.0;
  return oracle::from_rows(1, 1, rows);
}

struct DeskRun {
  encoder::Checkpoint model;
  std::vector<LogRecord> test;
};

const DeskRun& desk_run() {
  static const DeskRun run = [] {
    const auto corpus = generate_synthetic_corpus(2000, 2000, 7);
    const auto split = split_dataset(corpus, {3200, 400, 400}, 1);
    encoder::EncoderConfig cfg;
    const auto vocab = encoder::build_vocab(split.train, cfg);
    const auto trained = encoder::train(split, vocab, cfg, encoder::TrainOptions{});
    return DeskRun{encoder::Checkpoint{vocab, trained.params}, split.test};
  }();
  return run;
}

} // namespace

int main() {
  const auto cases = random_cases(200);
  const attnlysis::AnalysisConfig acfg;

  criterion("attention-analysis-oracle", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const auto got = attnlysis::analyze(cases[k].stack, cases[k].tokens, acfg);
      const auto diff = oracle::compare(got, oracle::analyze(cases[k].stack, cases[k].tokens, acfg), 1e-9);
      if (!diff.empty()) return Outcome{false, "case " + std::to_string(k) + ": " + diff};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return Outcome{secs < 5.0, fmt("200 tensors agree within 1e-9 in %.3fs (limit 5s)", secs)};
  });

  criterion("entropy-edge-cases", [&] {
    double worst_uniform = 0.0, worst_one_hot = 0.0;
    for (std::size_t n = 2; n <= 8; ++n) {
      const auto u = attnlysis::head_entropies(constant_stack(n, false), acfg);
      const auto o = attnlysis::head_entropies(constant_stack(n, true), acfg);
      worst_uniform = std::max(worst_uniform, std::abs(u.at(0).avg_entropy - std::log(double(n))));
      worst_one_hot = std::max(worst_one_hot, std::abs(o.at(0).avg_entropy));
    }
    return Outcome{worst_uniform <= 1e-6 && worst_one_hot <= 2e-9,
                   fmt("max |H-ln n| = %.2e, max |H one-hot| = %.2e", worst_uniform, worst_one_hot)};
  });

  criterion("saliency-normalization", [&] {
    double worst = 0.0;
    for (const auto& c : cases) {
      double sum = 0.0;
      for (double s : attnlysis::token_saliency(c.stack, c.tokens, acfg).scores) sum += s;
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    return Outcome{worst <= 1e-6, fmt("max |sum-1| = %.2e over 200 tensors", worst)};
  });

  criterion("published-metrics-reconstruction", [] {
    std::ostringstream bad;
    int cells = 0;
    for (const auto& row : oracle::published_rows()) {
      const auto r = metrics::report_from_confusion(row.cm);
      const auto& n = r.per_class.at(Label::normal);
      const auto& a = r.per_class.at(Label::anomaly);
      const std::pair<double, double> checks[] = {
          {oracle::round_to(r.accuracy, 4), row.accuracy},   {oracle::round_to(n.precision, 2), row.prec_n},
          {oracle::round_to(n.recall, 2), row.rec_n},        {oracle::round_to(n.f1, 2), row.f1_n},
          {oracle::round_to(a.precision, 2), row.prec_a},    {oracle::round_to(a.recall, 2), row.rec_a},
          {oracle::round_to(a.f1, 2), row.f1_a},             {oracle::round_to(r.macro_f1, 2), row.macro},
          {oracle::round_to(r.weighted_f1, 2), row.weighted}};
      for (const auto& [got, want] : checks) {
        ++cells;
        if (std::abs(got - want) > 1e-12) bad << row.model << " " << got << "!=" << want << "; ";
      }
    }
    const bool headline = std::abs(metrics::report_from_confusion(oracle::published_rows()[1].cm).accuracy - 0.996) < 1e-12;
    return Outcome{bad.str().empty() && headline,
                   bad.str().empty() ? std::to_string(cells) + " printed cells reproduced" : bad.str()};
  });

  criterion("gradient-check", [] {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto g = fixtures::gradient_check(seed);
      worst = std::max(worst, g.max_rel_err);
      checked += g.checked;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return Outcome{worst < 1e-5 && checked == 60 && secs < 10.0,
                   fmt("max rel err %.2e over %.0f parameters in %.2fs", worst, double(checked), secs)};
  });

  criterion("desk-scale-end-to-end", [] {
    const auto& run = desk_run();
    const auto report = evaluate_model(run.test, run.model);
    const double acc = report.accuracy;
    const double recall = report.per_class.at(Label::anomaly).recall;
    return Outcome{acc >= 0.95 && recall >= 0.90,
                   fmt("test accuracy %.4f, anomaly recall %.4f on 400 held-out lines", acc, recall)};
  });

  criterion("attribution-completeness", [] {
    const auto& run = desk_run();
    double worst = 0.0;
    for (std::size_t k = 0; k < 20; ++k) {
      const auto& rec = run.test.at(k * 19 % run.test.size());
      const auto a = encoder::integrated_gradients(rec.normalized_text, run.model.params, run.model.vocab, 128);
      worst = std::max(worst, a.completeness_gap() / std::abs(a.logit_gap()));
    }
    return Outcome{worst <= 0.02, fmt("worst gap %.3e of the logit difference (limit 2%%)", worst)};
  });

  criterion("service-round-trip", [] {
    using namespace logxai::service;
    const auto& run = desk_run();
    fixtures::TempDir dir;
    std::string text;
    for (const auto& r : generate_synthetic_corpus(40, 10, 99)) text += r.raw_text + "\n";
    ServiceConfig cfg;
    cfg.store_path = dir.str("store");
    cfg.ig_steps = 32;
    auto make = [&] {
      return std::make_unique<Service>(cfg, std::make_shared<FileStore>(cfg.store_path), run.model,
                                       reportgen::default_catalog(), default_questionnaire());
    };
    const auto& mcfg = run.model.params.config;

    std::string id;
    std::vector<std::string> before;
    {
      auto svc = make();
      id = svc->create_session(text, "fifty.log").body.at("session_id");
      if (svc->analyze_session(id).status != 200) return Outcome{false, "analyze did not return 200"};
      const auto results = svc->get_results(id);
      if (results.body.at("results").size() != 50) return Outcome{false, "results do not have 50 rows"};
      before.push_back(results.body.dump());
      double worst_row = 0.0;
      for (std::size_t n = 1; n <= 50; ++n) {
        const auto att = svc->get_line_attention(id, n).body;
        const auto& dims = att.at("dims");
        if (dims.at("layers") != mcfg.num_layers || dims.at("heads") != mcfg.num_heads ||
            dims.at("seq_len") != att.at("tokens").size())
          return Outcome{false, "attention dims mismatch on line " + std::to_string(n)};
        for (const auto& layer : att.at("attentions"))
          for (const auto& head : layer)
            for (const auto& row : head) {
              double sum = 0.0;
              for (const auto& v : row) sum += v.get<double>();
              worst_row = std::max(worst_row, std::abs(sum - 1.0));
            }
        const auto rep = svc->get_line_report(id, n).body;
        const bool no_warnings = rep.at("summary").at("bias_warnings").empty();
        const std::string report_text = rep.at("report_text");
        if (no_warnings != report_text.ends_with("Special Token Bias Warnings:\n  None\n"))
          return Outcome{false, "report bias section disagrees with summary on line " + std::to_string(n)};
        before.push_back(att.dump());
        before.push_back(rep.dump());
      }
      if (worst_row > 1e-6) return Outcome{false, fmt("attention row off by %.2e", worst_row)};
    }
    auto svc = make();
    std::vector<std::string> after{svc->get_results(id).body.dump()};
    for (std::size_t n = 1; n <= 50; ++n) {
      after.push_back(svc->get_line_attention(id, n).body.dump());
      after.push_back(svc->get_line_report(id, n).body.dump());
    }
    return Outcome{after == before, after == before ? "50 rows, dims and rows valid, payloads identical after restart"
                                                    : "payloads differ after restart"};
  });

  criterion("readability-formulas", [] {
    const auto r = reportgen::readability_scores("The cat sat.");
    return Outcome{std::abs(r.flesch_reading_ease - 119.19) <= 0.01 &&
                       std::abs(r.flesch_kincaid_grade + 2.62) <= 0.01,
                   fmt("FRE %.4f, FKG %.4f", r.flesch_reading_ease, r.flesch_kincaid_grade)};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
