#pragma once

// Pre-norm transformer encoder with a two-way classification head read from
// the <s> position. Parameters live in one flat buffer so the optimizer,
// gradient checks and checkpoints all share the same addressing.

#include "logxai/attention.hpp"
#include "logxai/encoder/config.hpp"
#include "logxai/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace logxai::encoder {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Logits = Eigen::Vector2d;

struct TensorSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

struct LayerSlots {
  std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

/// Names, shapes and offsets of every parameter tensor, in storage order.
class ParamLayout {
public:
  ParamLayout() = default;
  ParamLayout(const EncoderConfig& c, std::size_t vocab_size) {
    const std::size_t d = c.d_model;
    tok_emb = add("tok_emb", vocab_size, d);
    pos_emb = add("pos_emb", c.max_seq_len, d);
    for (std::size_t l = 0; l < c.num_layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      LayerSlots s{};
      s.ln1_g = add(p + "ln1.gain", 1, d);
      s.ln1_b = add(p + "ln1.bias", 1, d);
      s.wq = add(p + "attn.wq", d, d);
      s.bq = add(p + "attn.bq", 1, d);
      s.wk = add(p + "attn.wk", d, d);
      s.bk = add(p + "attn.bk", 1, d);
      s.wv = add(p + "attn.wv", d, d);
      s.bv = add(p + "attn.bv", 1, d);
      s.wo = add(p + "attn.wo", d, d);
      s.bo = add(p + "attn.bo", 1, d);
      s.ln2_g = add(p + "ln2.gain", 1, d);
      s.ln2_b = add(p + "ln2.bias", 1, d);
      s.w1 = add(p + "ffn.w1", d, c.d_ff);
      s.b1 = add(p + "ffn.b1", 1, c.d_ff);
      s.w2 = add(p + "ffn.w2", c.d_ff, d);
      s.b2 = add(p + "ffn.b2", 1, d);
      layers.push_back(s);
    }
    lnf_g = add("final_ln.gain", 1, d);
    lnf_b = add("final_ln.bias", 1, d);
    cls_w = add("classifier.w", d, 2);
    cls_b = add("classifier.b", 1, 2);
  }

  const std::vector<TensorSpec>& specs() const noexcept { return specs_; }
  const TensorSpec& spec(std::size_t slot) const { return specs_.at(slot); }
  std::size_t total() const noexcept { return total_; }

  std::size_t tok_emb = 0, pos_emb = 0, lnf_g = 0, lnf_b = 0, cls_w = 0, cls_b = 0;
  std::vector<LayerSlots> layers;

private:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols) {
    specs_.push_back({std::move(name), rows, cols, total_});
    total_ += rows * cols;
    return specs_.size() - 1;
  }

  std::vector<TensorSpec> specs_;
  std::size_t total_ = 0;
};

struct ModelParams {
  EncoderConfig config;
  std::size_t vocab_size = 0;
  ParamLayout layout;
  std::vector<double> values;

  Eigen::Map<const Matrix> mat(std::size_t slot) const {
    const auto& s = layout.spec(slot);
    return {values.data() + s.offset, static_cast<Eigen::Index>(s.rows),
            static_cast<Eigen::Index>(s.cols)};
  }
  Eigen::Map<const RowVector> vec(std::size_t slot) const {
    const auto& s = layout.spec(slot);
    return {values.data() + s.offset, static_cast<Eigen::Index>(s.size())};
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.config == b.config && a.vocab_size == b.vocab_size && a.values == b.values;
  }
};

/// Gains at 1, biases at 0, everything else N(0, init_std²) drawn from config.seed.
inline ModelParams initialize_params(const EncoderConfig& config, std::size_t vocab_size) {
  config.validate();
  ModelParams p{config, vocab_size, ParamLayout(config, vocab_size), {}};
  p.values.assign(p.layout.total(), 0.0);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (const auto& s : p.layout.specs()) {
    const bool is_gain = s.name.ends_with(".gain");
    const bool is_bias = s.rows == 1 && !is_gain;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double& v = p.values[s.offset + i];
      if (is_gain)
        v = 1.0;
      else if (!is_bias)
        v = normal(rng);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward

namespace detail {

inline constexpr double ln_eps = 1e-5;
inline constexpr double gelu_c = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double gelu_k = 0.044715;

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(gelu_c * (x + gelu_k * x * x * x)));
}

inline double gelu_grad(double x) {
  const double t = std::tanh(gelu_c * (x + gelu_k * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * gelu_c * (1.0 + 3.0 * gelu_k * x * x);
}

struct NormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

inline Matrix layer_norm(const Matrix& x, const Eigen::Map<const RowVector>& gain,
                         const Eigen::Map<const RowVector>& bias, NormCache& cache) {
  const Eigen::Index n = x.rows();
  const double cols = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.rstd.resize(n);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = x.row(r).sum() / cols;
    const RowVector centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / cols;
    const double rstd = 1.0 / std::sqrt(var + ln_eps);
    cache.rstd(r) = rstd;
    cache.xhat.row(r) = centered * rstd;
    y.row(r) = cache.xhat.row(r).cwiseProduct(gain) + bias;
  }
  return y;
}

/// Returns dx; accumulates gain/bias gradients when `dgain` is non-null.
inline Matrix layer_norm_backward(const Matrix& dy, const NormCache& cache,
                                  const Eigen::Map<const RowVector>& gain, double* dgain,
                                  double* dbias) {
  const Eigen::Index cols = dy.cols();
  if (dgain) {
    Eigen::Map<RowVector> dg(dgain, cols);
    Eigen::Map<RowVector> db(dbias, cols);
    dg += dy.cwiseProduct(cache.xhat).colwise().sum();
    db += dy.colwise().sum();
  }
  Matrix dx(dy.rows(), cols);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const RowVector dxhat = dy.row(r).cwiseProduct(gain);
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(cache.xhat.row(r)).mean();
    dx.row(r) = cache.rstd(r) * (dxhat.array() - m1 - cache.xhat.row(r).array() * m2).matrix();
  }
  return dx;
}

} // namespace detail

struct LayerCache {
  Matrix x_in;
  detail::NormCache ln1;
  Matrix a, q, k, v;
  std::vector<Matrix> probs;  // per head, seq×seq
  Matrix o;
  Matrix attn_mask;  // empty unless dropout was applied
  Matrix x_mid;
  detail::NormCache ln2;
  Matrix b, h_pre, h_act;
  Matrix ffn_mask;
};

struct ForwardPass {
  std::size_t seq_len = 0;
  std::vector<LayerCache> layers;
  detail::NormCache lnf;
  Matrix final_out;
  Logits logits = Logits::Zero();
};

/// Dropout source for training-mode forward passes.
struct DropoutSampler {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;

  Matrix mask(Eigen::Index rows, Eigen::Index cols) const {
    Matrix m(rows, cols);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(*rng) < rate ? 0.0 : keep_scale;
    return m;
  }
};

/// Token-embedding rows for `ids` (the integrated-gradients input space).
inline Matrix embed_tokens(const ModelParams& p, std::span<const int> ids) {
  const auto table = p.mat(p.layout.tok_emb);
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= p.vocab_size)
      throw ArgumentError("token id " + std::to_string(ids[i]) + " outside the vocabulary");
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

/// Runs the encoder on token embeddings (positional embeddings are added here).
/// `dropout` is null at inference.
inline ForwardPass forward(const ModelParams& p, const Matrix& token_embeddings,
                           const DropoutSampler* dropout = nullptr) {
  const auto& c = p.config;
  const Eigen::Index seq = token_embeddings.rows();
  if (seq < 1 || static_cast<std::size_t>(seq) > c.max_seq_len)
    throw ShapeError("sequence length " + std::to_string(seq) + " outside [1, max_seq_len]");
  const Eigen::Index dh = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = dropout && dropout->rate > 0.0;

  ForwardPass fp;
  fp.seq_len = static_cast<std::size_t>(seq);
  Matrix x = token_embeddings + p.mat(p.layout.pos_emb).topRows(seq);
  fp.layers.resize(c.num_layers);
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const auto& s = p.layout.layers[l];
    auto& lc = fp.layers[l];
    lc.x_in = x;
    lc.a = detail::layer_norm(x, p.vec(s.ln1_g), p.vec(s.ln1_b), lc.ln1);
    lc.q = (lc.a * p.mat(s.wq)).rowwise() + p.vec(s.bq);
    lc.k = (lc.a * p.mat(s.wk)).rowwise() + p.vec(s.bk);
    lc.v = (lc.a * p.mat(s.wv)).rowwise() + p.vec(s.bv);
    lc.o.resize(seq, static_cast<Eigen::Index>(c.d_model));
    lc.probs.resize(c.num_heads);
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      const Eigen::Index col = static_cast<Eigen::Index>(h) * dh;
      Matrix scores = (lc.q.middleCols(col, dh) * lc.k.middleCols(col, dh).transpose()) * scale;
      for (Eigen::Index r = 0; r < seq; ++r) {
        const double mx = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - mx).exp().matrix();
        scores.row(r) /= scores.row(r).sum();
      }
      lc.o.middleCols(col, dh) = scores * lc.v.middleCols(col, dh);
      lc.probs[h] = std::move(scores);
    }
    Matrix z = (lc.o * p.mat(s.wo)).rowwise() + p.vec(s.bo);
    if (drop) {
      lc.attn_mask = dropout->mask(z.rows(), z.cols());
      z = z.cwiseProduct(lc.attn_mask);
    }
    lc.x_mid = x + z;
    lc.b = detail::layer_norm(lc.x_mid, p.vec(s.ln2_g), p.vec(s.ln2_b), lc.ln2);
    lc.h_pre = (lc.b * p.mat(s.w1)).rowwise() + p.vec(s.b1);
    lc.h_act = lc.h_pre.unaryExpr([](double v) { return detail::gelu(v); });
    Matrix y = (lc.h_act * p.mat(s.w2)).rowwise() + p.vec(s.b2);
    if (drop) {
      lc.ffn_mask = dropout->mask(y.rows(), y.cols());
      y = y.cwiseProduct(lc.ffn_mask);
    }
    x = lc.x_mid + y;
  }
  fp.final_out = detail::layer_norm(x, p.vec(p.layout.lnf_g), p.vec(p.layout.lnf_b), fp.lnf);
  const RowVector cls = fp.final_out.row(0) * p.mat(p.layout.cls_w) + p.vec(p.layout.cls_b);
  fp.logits = cls.transpose();
  return fp;
}

inline AttentionStack collect_attention(const ForwardPass& fp) {
  const std::size_t heads = fp.layers.empty() ? 0 : fp.layers.front().probs.size();
  AttentionStack att(fp.layers.size(), heads, fp.seq_len);
  for (std::size_t l = 0; l < fp.layers.size(); ++l)
    for (std::size_t h = 0; h < heads; ++h) {
      auto dst = att.head(l, h);
      const Matrix& src = fp.layers[l].probs[h];
      std::copy(src.data(), src.data() + src.size(), dst.begin());
    }
  return att;
}

// ---------------------------------------------------------------------------
// Backward

/// Backpropagates `dlogits` through a recorded forward pass. Returns the
/// gradient with respect to the token-embedding input. When `grads` is
/// non-empty (layout-sized) every parameter gradient except the token
/// embedding table is accumulated into it; see scatter_token_grad.
inline Matrix backward(const ModelParams& p, const ForwardPass& fp, const Logits& dlogits,
                       std::span<double> grads = {}) {
  const auto& c = p.config;
  const auto& L = p.layout;
  const bool want = !grads.empty();
  const Eigen::Index seq = static_cast<Eigen::Index>(fp.seq_len);
  const Eigen::Index dh = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto gmat = [&](std::size_t slot) {
    const auto& s = L.spec(slot);
    return Eigen::Map<Matrix>(grads.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                              static_cast<Eigen::Index>(s.cols));
  };
  auto gvec = [&](std::size_t slot) {
    const auto& s = L.spec(slot);
    return Eigen::Map<RowVector>(grads.data() + s.offset, static_cast<Eigen::Index>(s.size()));
  };
  auto gptr = [&](std::size_t slot) { return want ? grads.data() + L.spec(slot).offset : nullptr; };

  const RowVector dl = dlogits.transpose();
  if (want) {
    gmat(L.cls_w) += fp.final_out.row(0).transpose() * dl;
    gvec(L.cls_b) += dl;
  }
  Matrix dfinal = Matrix::Zero(seq, static_cast<Eigen::Index>(c.d_model));
  dfinal.row(0) = dl * p.mat(L.cls_w).transpose();
  Matrix dx = detail::layer_norm_backward(dfinal, fp.lnf, p.vec(L.lnf_g), gptr(L.lnf_g),
                                          gptr(L.lnf_b));

  for (std::size_t li = c.num_layers; li-- > 0;) {
    const auto& s = L.layers[li];
    const auto& lc = fp.layers[li];

    // Feed-forward branch.
    Matrix dy = lc.ffn_mask.size() ? Matrix(dx.cwiseProduct(lc.ffn_mask)) : dx;
    if (want) {
      gmat(s.w2) += lc.h_act.transpose() * dy;
      gvec(s.b2) += dy.colwise().sum();
    }
    Matrix dh_pre = (dy * p.mat(s.w2).transpose())
                        .cwiseProduct(lc.h_pre.unaryExpr([](double v) { return detail::gelu_grad(v); }));
    if (want) {
      gmat(s.w1) += lc.b.transpose() * dh_pre;
      gvec(s.b1) += dh_pre.colwise().sum();
    }
    const Matrix db = dh_pre * p.mat(s.w1).transpose();
    dx += detail::layer_norm_backward(db, lc.ln2, p.vec(s.ln2_g), gptr(s.ln2_g), gptr(s.ln2_b));

    // Attention branch.
    Matrix dz = lc.attn_mask.size() ? Matrix(dx.cwiseProduct(lc.attn_mask)) : dx;
    if (want) {
      gmat(s.wo) += lc.o.transpose() * dz;
      gvec(s.bo) += dz.colwise().sum();
    }
    const Matrix d_o = dz * p.mat(s.wo).transpose();
    Matrix dq(seq, static_cast<Eigen::Index>(c.d_model));
    Matrix dk(seq, static_cast<Eigen::Index>(c.d_model));
    Matrix dv(seq, static_cast<Eigen::Index>(c.d_model));
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      const Eigen::Index col = static_cast<Eigen::Index>(h) * dh;
      const Matrix& P = lc.probs[h];
      const Matrix doh = d_o.middleCols(col, dh);
      const Matrix dP = doh * lc.v.middleCols(col, dh).transpose();
      dv.middleCols(col, dh) = P.transpose() * doh;
      Matrix dS(seq, seq);
      for (Eigen::Index r = 0; r < seq; ++r) {
        const double dot = dP.row(r).dot(P.row(r));
        dS.row(r) = P.row(r).cwiseProduct((dP.row(r).array() - dot).matrix());
      }
      dS *= scale;
      dq.middleCols(col, dh) = dS * lc.k.middleCols(col, dh);
      dk.middleCols(col, dh) = dS.transpose() * lc.q.middleCols(col, dh);
    }
    if (want) {
      gmat(s.wq) += lc.a.transpose() * dq;
      gvec(s.bq) += dq.colwise().sum();
      gmat(s.wk) += lc.a.transpose() * dk;
      gvec(s.bk) += dk.colwise().sum();
      gmat(s.wv) += lc.a.transpose() * dv;
      gvec(s.bv) += dv.colwise().sum();
    }
    const Matrix da = dq * p.mat(s.wq).transpose() + dk * p.mat(s.wk).transpose() +
                      dv * p.mat(s.wv).transpose();
    dx += detail::layer_norm_backward(da, lc.ln1, p.vec(s.ln1_g), gptr(s.ln1_g), gptr(s.ln1_b));
  }

  if (want) gmat(L.pos_emb).topRows(seq) += dx;
  return dx;
}

/// Adds the token-input gradient into the embedding-table rows used by `ids`.
inline void scatter_token_grad(const ModelParams& p, std::span<const int> ids,
                               const Matrix& d_input, std::span<double> grads) {
  const auto& s = p.layout.spec(p.layout.tok_emb);
  Eigen::Map<Matrix> table(grads.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                           static_cast<Eigen::Index>(s.cols));
  for (std::size_t i = 0; i < ids.size(); ++i)
    table.row(ids[i]) += d_input.row(static_cast<Eigen::Index>(i));
}

inline Eigen::Vector2d softmax(const Logits& z) {
  const double m = z.maxCoeff();
  Eigen::Vector2d e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

/// Cross-entropy of the <s>-position logits against `target` (0 normal, 1 anomaly).
/// Accumulates d(loss)/d(params) scaled by `weight` into `grads` when non-empty.
inline double loss_and_grad(const ModelParams& p, std::span<const int> ids, int target,
                            std::span<double> grads, double weight = 1.0,
                            const DropoutSampler* dropout = nullptr) {
  const ForwardPass fp = forward(p, embed_tokens(p, ids), dropout);
  const Eigen::Vector2d prob = softmax(fp.logits);
  const double m = fp.logits.maxCoeff();
  const double lse = m + std::log((fp.logits.array() - m).exp().sum());
  const double loss = lse - fp.logits(target);
  if (!grads.empty()) {
    Logits dl = prob;
    dl(target) -= 1.0;
    dl *= weight;
    const Matrix dx = backward(p, fp, dl, grads);
    scatter_token_grad(p, ids, dx, grads);
  }
  return loss;
}

} // namespace logxai::encoder
