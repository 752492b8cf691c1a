#pragma once

#include "logxai/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace logxai {

/// Post-softmax attention probabilities, laid out [layer][head][query][key].
class AttentionStack {
public:
  AttentionStack() = default;
  AttentionStack(std::size_t layers, std::size_t heads, std::size_t seq_len)
      : layers_(layers), heads_(heads), seq_(seq_len),
        data_(layers * heads * seq_len * seq_len, 0.0) {}

  std::size_t layers() const noexcept { return layers_; }
  std::size_t heads() const noexcept { return heads_; }
  std::size_t seq_len() const noexcept { return seq_; }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t l, std::size_t h, std::size_t i, std::size_t j) noexcept {
    return data_[index(l, h, i, j)];
  }
  double at(std::size_t l, std::size_t h, std::size_t i, std::size_t j) const noexcept {
    return data_[index(l, h, i, j)];
  }

  /// One head's seq×seq matrix, row-major.
  std::span<double> head(std::size_t l, std::size_t h) noexcept {
    return {data_.data() + index(l, h, 0, 0), seq_ * seq_};
  }
  std::span<const double> head(std::size_t l, std::size_t h) const noexcept {
    return {data_.data() + index(l, h, 0, 0), seq_ * seq_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  /// Throws ShapeError unless every entry is in [0,1] and every row sums to 1.
  void validate(double tol = 1e-6) const {
    if (layers_ == 0 || heads_ == 0 || seq_ == 0)
      throw ShapeError("attention stack has a zero dimension");
    for (std::size_t l = 0; l < layers_; ++l)
      for (std::size_t h = 0; h < heads_; ++h)
        for (std::size_t i = 0; i < seq_; ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < seq_; ++j) {
            const double p = at(l, h, i, j);
            if (!(p >= -tol && p <= 1.0 + tol))
              throw ShapeError("attention entry out of [0,1] at layer " + std::to_string(l) +
                               ", head " + std::to_string(h));
            sum += p;
          }
          if (std::abs(sum - 1.0) > tol)
            throw ShapeError("attention row " + std::to_string(i) + " of layer " +
                             std::to_string(l) + ", head " + std::to_string(h) +
                             " does not sum to 1");
        }
  }

  friend bool operator==(const AttentionStack&, const AttentionStack&) = default;

private:
  std::size_t index(std::size_t l, std::size_t h, std::size_t i, std::size_t j) const noexcept {
    return ((l * heads_ + h) * seq_ + i) * seq_ + j;
  }

  std::size_t layers_ = 0;
  std::size_t heads_ = 0;
  std::size_t seq_ = 0;
  std::vector<double> data_;
};

/// {"dims": {layers, heads, seq_len}, "attentions": [L][H][S][S]}
inline void to_json(nlohmann::json& j, const AttentionStack& a) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < a.layers(); ++l) {
    nlohmann::json heads = nlohmann::json::array();
    for (std::size_t h = 0; h < a.heads(); ++h) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < a.seq_len(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t k = 0; k < a.seq_len(); ++k) row.push_back(a.at(l, h, i, k));
        rows.push_back(std::move(row));
      }
      heads.push_back(std::move(rows));
    }
    layers.push_back(std::move(heads));
  }
  j = nlohmann::json{
      {"dims", {{"layers", a.layers()}, {"heads", a.heads()}, {"seq_len", a.seq_len()}}},
      {"attentions", std::move(layers)}};
}

inline void from_json(const nlohmann::json& j, AttentionStack& a) {
  const auto& dims = j.at("dims");
  AttentionStack out(dims.at("layers").get<std::size_t>(), dims.at("heads").get<std::size_t>(),
                     dims.at("seq_len").get<std::size_t>());
  const auto& t = j.at("attentions");
  if (t.size() != out.layers()) throw ShapeError("attention payload layer count mismatch");
  for (std::size_t l = 0; l < out.layers(); ++l) {
    if (t[l].size() != out.heads()) throw ShapeError("attention payload head count mismatch");
    for (std::size_t h = 0; h < out.heads(); ++h) {
      if (t[l][h].size() != out.seq_len()) throw ShapeError("attention payload row count mismatch");
      for (std::size_t i = 0; i < out.seq_len(); ++i) {
        if (t[l][h][i].size() != out.seq_len())
          throw ShapeError("attention payload column count mismatch");
        for (std::size_t k = 0; k < out.seq_len(); ++k) out.at(l, h, i, k) = t[l][h][i][k].get<double>();
      }
    }
  }
  a = std::move(out);
}

} // namespace logxai
