#pragma once

#include "logxai/errors.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <string>

namespace logxai::encoder {

struct EncoderConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t max_seq_len = 64;
  std::size_t vocab_max = 8192;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  double init_std = 0.02;  // stddev of the normal used for weights and embeddings

  std::size_t head_dim() const noexcept { return d_model / num_heads; }

  void validate() const {
    if (num_layers < 1 || num_heads < 1 || d_model < 1 || d_ff < 1)
      throw ConfigError("encoder dimensions must all be >= 1");
    if (d_model % num_heads != 0)
      throw ConfigError("d_model (" + std::to_string(d_model) +
                        ") must be divisible by num_heads (" + std::to_string(num_heads) + ")");
    if (max_seq_len < 2) throw ConfigError("max_seq_len must leave room for <s> and </s>");
    if (vocab_max < 5) throw ConfigError("vocab_max must exceed the 4 special tokens");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
    if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"num_layers", c.num_layers}, {"num_heads", c.num_heads},   {"d_model", c.d_model},
       {"d_ff", c.d_ff},             {"max_seq_len", c.max_seq_len}, {"vocab_max", c.vocab_max},
       {"dropout", c.dropout},       {"seed", c.seed},             {"init_std", c.init_std}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  j.at("num_layers").get_to(c.num_layers);
  j.at("num_heads").get_to(c.num_heads);
  j.at("d_model").get_to(c.d_model);
  j.at("d_ff").get_to(c.d_ff);
  j.at("max_seq_len").get_to(c.max_seq_len);
  j.at("vocab_max").get_to(c.vocab_max);
  j.at("dropout").get_to(c.dropout);
  j.at("seed").get_to(c.seed);
  c.init_std = j.value("init_std", 0.02);
}

} // namespace logxai::encoder
