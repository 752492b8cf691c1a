#pragma once

#include "logxai/encoder/model.hpp"
#include "logxai/encoder/vocab.hpp"
#include "logxai/logcore.hpp"

#include "json.hpp"

#include <fstream>
#include <string>

namespace logxai::encoder {

inline constexpr std::string_view checkpoint_format = "logxai-checkpoint";
inline constexpr int checkpoint_version = 1;

struct Checkpoint {
  Vocabulary vocab;
  ModelParams params;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& s : ck.params.layout.specs()) {
    tensors.push_back({{"name", s.name},
                       {"shape", {s.rows, s.cols}},
                       {"data", std::vector<double>(ck.params.values.begin() + s.offset,
                                                    ck.params.values.begin() + s.offset + s.size())}});
  }
  std::vector<std::string> words(ck.vocab.tokens().begin() + num_special, ck.vocab.tokens().end());
  return {{"format", checkpoint_format},
          {"version", checkpoint_version},
          {"config", ck.params.config},
          {"vocab", words},
          {"tensors", std::move(tensors)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != checkpoint_format) throw CheckpointError("not a logxai checkpoint");
    if (!j.contains("version")) throw CheckpointError("checkpoint has no version field");
    const int version = j.at("version").get<int>();
    if (version != checkpoint_version)
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                            " (expected " + std::to_string(checkpoint_version) + ")");
    const auto config = j.at("config").get<EncoderConfig>();
    config.validate();
    Checkpoint ck{Vocabulary(j.at("vocab").get<std::vector<std::string>>()), {}};
    ck.params = {config, ck.vocab.size(), ParamLayout(config, ck.vocab.size()), {}};
    ck.params.values.assign(ck.params.layout.total(), 0.0);

    const auto& tensors = j.at("tensors");
    const auto& specs = ck.params.layout.specs();
    if (tensors.size() != specs.size())
      throw CheckpointError("checkpoint holds " + std::to_string(tensors.size()) +
                            " tensors, config implies " + std::to_string(specs.size()));
    for (std::size_t t = 0; t < specs.size(); ++t) {
      const auto& s = specs[t];
      const auto& tj = tensors[t];
      if (tj.at("name").get<std::string>() != s.name)
        throw CheckpointError("tensor " + std::to_string(t) + " should be '" + s.name + "'");
      const auto shape = tj.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != s.rows || shape[1] != s.cols)
        throw CheckpointError("tensor '" + s.name + "' has the wrong shape");
      const auto& data = tj.at("data");
      if (data.size() != s.size())
        throw CheckpointError("tensor '" + s.name + "' has the wrong element count");
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = data[i].get<double>();
        if (!std::isfinite(v)) throw CheckpointError("tensor '" + s.name + "' is not finite");
        ck.params.values[s.offset + i] = v;
      }
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ck).dump();
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

} // namespace logxai::encoder
