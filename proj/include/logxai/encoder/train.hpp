#pragma once

#include "logxai/encoder/model.hpp"
#include "logxai/encoder/vocab.hpp"
#include "logxai/label.hpp"
#include "logxai/logcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace logxai::encoder {

struct TrainOptions {
  std::size_t epochs = 3;
  double lr = 3e-4;
  std::size_t batch = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainReport {
  std::size_t epochs = 0;
  double final_train_loss = 0.0;
  std::vector<double> val_accuracy_per_epoch;
  std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const TrainReport& r) {
  j = {{"epochs", r.epochs},
       {"final_train_loss", r.final_train_loss},
       {"val_accuracy_per_epoch", r.val_accuracy_per_epoch},
       {"seed", r.seed}};
}

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Adaptive-moment optimizer state over the flat parameter buffer.
class Adam {
public:
  Adam(std::size_t n, const TrainOptions& opt) : opt_(opt), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = opt_.beta1 * m_[i] + (1.0 - opt_.beta1) * grads[i];
      v_[i] = opt_.beta2 * v_[i] + (1.0 - opt_.beta2) * grads[i] * grads[i];
      params[i] -= opt_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + opt_.adam_eps);
    }
  }

private:
  TrainOptions opt_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

struct Prediction {
  Label label = Label::normal;
  double confidence = 0.0;
  Logits logits = Logits::Zero();
  std::vector<std::string> tokens;
  AttentionStack attentions;
};

inline void to_json(nlohmann::json& j, const Prediction& p) {
  j = {{"label", std::string(to_string(p.label))},
       {"confidence", p.confidence},
       {"logits", {p.logits(0), p.logits(1)}},
       {"tokens", p.tokens},
       {"attentions", p.attentions}};
}

inline void from_json(const nlohmann::json& j, Prediction& p) {
  const auto label = label_from_string(j.at("label").get<std::string>());
  if (!label) throw ParseError("prediction has an unknown label");
  p.label = *label;
  p.confidence = j.at("confidence").get<double>();
  p.logits = Logits(j.at("logits").at(0).get<double>(), j.at("logits").at(1).get<double>());
  p.tokens = j.at("tokens").get<std::vector<std::string>>();
  p.attentions = j.at("attentions").get<AttentionStack>();
}

/// Inference on already-tokenized input; dropout is off.
inline Prediction predict_ids(const TokenizedText& tok, const ModelParams& params) {
  const ForwardPass fp = forward(params, embed_tokens(params, tok.ids));
  const Eigen::Vector2d prob = softmax(fp.logits);
  Prediction out;
  out.label = prob(1) > prob(0) ? Label::anomaly : Label::normal;
  out.confidence = prob(static_cast<int>(out.label));
  out.logits = fp.logits;
  out.tokens = tok.tokens;
  out.attentions = collect_attention(fp);
  return out;
}

/// Classifies one normalized line and captures every head's attention.
inline Prediction predict(std::string_view text, const ModelParams& params,
                          const Vocabulary& vocab) {
  if (split_words(text).empty())
    throw DegenerateInputError("nothing to classify: line is empty after normalization");
  return predict_ids(tokenize(text, vocab, params.config.max_seq_len), params);
}

inline double accuracy(const std::vector<LogRecord>& records, const ModelParams& params,
                       const Vocabulary& vocab) {
  if (records.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& r : records) {
    const auto tok = tokenize(r.normalized_text, vocab, params.config.max_seq_len);
    const ForwardPass fp = forward(params, embed_tokens(params, tok.ids));
    const Label guess = fp.logits(1) > fp.logits(0) ? Label::anomaly : Label::normal;
    correct += (r.label && guess == *r.label) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

/// Mini-batch cross-entropy training. Initialization, shuffling and dropout all
/// draw from config.seed, so identical inputs give identical parameters.
/// `on_epoch` (optional) observes (epoch, mean train loss, val accuracy).
inline TrainResult train(const DatasetSplit& split, const Vocabulary& vocab,
                         const EncoderConfig& config, const TrainOptions& opt = {},
                         const std::function<void(std::size_t, double, double)>& on_epoch = {}) {
  config.validate();
  if (opt.batch < 1) throw ArgumentError("batch size must be >= 1");
  if (!(opt.lr > 0.0)) throw ArgumentError("learning rate must be positive");
  for (const auto* part : {&split.train, &split.val})
    for (const auto& r : *part)
      if (!r.label) throw ArgumentError("training data must be labeled");

  TrainResult result{initialize_params(config, vocab.size()), {}};
  result.report.seed = config.seed;
  ModelParams& params = result.params;

  std::vector<std::vector<int>> ids;
  std::vector<int> targets;
  ids.reserve(split.train.size());
  for (const auto& r : split.train) {
    ids.push_back(tokenize(r.normalized_text, vocab, config.max_seq_len).ids);
    targets.push_back(*r.label == Label::anomaly ? 1 : 0);
  }

  // Separate stream from initialization so changing dropout never perturbs init.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const DropoutSampler dropout{config.dropout, &rng};
  Adam adam(params.values.size(), opt);
  std::vector<double> grads(params.values.size(), 0.0);
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  double last_epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += opt.batch) {
      const std::size_t end = std::min(order.size(), begin + opt.batch);
      const double weight = 1.0 / static_cast<double>(end - begin);
      std::fill(grads.begin(), grads.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        batch_loss += loss_and_grad(params, ids[i], targets[i], grads, weight, &dropout);
      }
      ++step;
      if (!std::isfinite(batch_loss))
        throw TrainingDivergedError("training diverged: non-finite loss at step " +
                                    std::to_string(step));
      adam.step(params.values, grads);
      loss_sum += batch_loss;
    }
    last_epoch_loss = ids.empty() ? 0.0 : loss_sum / static_cast<double>(ids.size());
    const double val_acc = accuracy(split.val, params, vocab);
    result.report.val_accuracy_per_epoch.push_back(val_acc);
    if (on_epoch) on_epoch(epoch + 1, last_epoch_loss, val_acc);
  }
  result.report.epochs = opt.epochs;

  if (opt.epochs == 0 && !ids.empty()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) sum += loss_and_grad(params, ids[i], targets[i], {});
    last_epoch_loss = sum / static_cast<double>(ids.size());
  }
  result.report.final_train_loss = last_epoch_loss;
  return result;
}

} // namespace logxai::encoder
