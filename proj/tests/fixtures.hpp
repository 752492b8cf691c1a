#pragma once

#include "logxai/encoder/checkpoint.hpp"
#include "logxai/encoder/train.hpp"
#include "logxai/logcore.hpp"

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

namespace fixtures {

/// A small model trained on the synthetic corpus; cached per process.
inline const logxai::encoder::Checkpoint& small_model() {
  static const logxai::encoder::Checkpoint ck = [] {
    using namespace logxai;
    const auto corpus = generate_synthetic_corpus(300, 300, 11);
    const auto split = split_dataset(corpus, {480, 60, 60}, 3);
    const auto vocab = encoder::build_vocab(split.train, {});
    encoder::EncoderConfig cfg;
    cfg.d_model = 32;
    cfg.d_ff = 64;
    cfg.num_heads = 2;
    cfg.seed = 5;
    encoder::TrainOptions opt;
    opt.epochs = 3;
    opt.lr = 1e-3;
    return encoder::Checkpoint{vocab, encoder::train(split, vocab, cfg, opt).params};
  }();
  return ck;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("logxai-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str(const std::string& child = {}) const {
    return child.empty() ? path_.string() : (path_ / child).string();
  }

private:
  std::filesystem::path path_;
};

} // namespace fixtures

namespace fixtures {

struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences (step h) against backprop for `count` random
/// parameters of a 1-layer, 1-head, d_model 8 model on a 3-token input.
inline GradCheck gradient_check(std::uint64_t seed, std::size_t count = 20, double h = 1e-4) {
  using namespace logxai::encoder;
  EncoderConfig cfg;
  cfg.num_layers = 1;
  cfg.num_heads = 1;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.max_seq_len = 8;
  cfg.dropout = 0.0;
  cfg.init_std = 0.5;
  cfg.seed = seed;
  const std::size_t vocab_size = 7;
  ModelParams p = initialize_params(cfg, vocab_size);
  const std::vector<int> ids{bos_id, 5, eos_id};
  const int target = static_cast<int>(seed % 2);

  std::vector<double> grads(p.values.size(), 0.0);
  loss_and_grad(p, ids, target, grads);

  // Only parameters that can influence this input.
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const auto& tok = p.layout.spec(p.layout.tok_emb);
    const auto& pos = p.layout.spec(p.layout.pos_emb);
    if (i >= tok.offset && i < tok.offset + tok.size()) {
      const int row = static_cast<int>((i - tok.offset) / tok.cols);
      if (row != bos_id && row != 5 && row != eos_id) continue;
    }
    if (i >= pos.offset && i < pos.offset + pos.size() && (i - pos.offset) / pos.cols >= ids.size())
      continue;
    live.push_back(i);
  }
  std::mt19937_64 rng(seed * 7919 + 1);
  std::shuffle(live.begin(), live.end(), rng);

  GradCheck out;
  for (std::size_t k = 0; k < count && k < live.size(); ++k) {
    const std::size_t i = live[k];
    const double keep = p.values[i];
    p.values[i] = keep + h;
    const double up = loss_and_grad(p, ids, target, {});
    p.values[i] = keep - h;
    const double down = loss_and_grad(p, ids, target, {});
    p.values[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grads[i]), 1e-7});
    out.max_rel_err = std::max(out.max_rel_err, std::abs(numeric - grads[i]) / denom);
    ++out.checked;
  }
  return out;
}

} // namespace fixtures
