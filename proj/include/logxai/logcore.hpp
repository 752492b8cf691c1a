#pragma once

// Log ingestion: normalization into templates, dataset parsing and
// serialization, seeded splitting, and the synthetic HDFS-style corpus.

#include "logxai/errors.hpp"
#include "logxai/label.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace logxai {

struct LogRecord {
  std::size_t line_no = 0;  // 1-based
  std::string raw_text;
  std::string normalized_text;
  std::optional<Label> label;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct NormalizationRule {
  std::string name;
  std::string pattern;      // ECMAScript regular expression
  std::string placeholder;  // e.g. "<BLK>"
};

/// Block IDs, then dotted-quad IPv4 addresses, then any remaining digit runs.
inline std::vector<NormalizationRule> default_rules() {
  return {
      {"block_id", R"(blk_-?\d+)", "<BLK>"},
      {"ipv4", R"(\b(?:\d{1,3}\.){3}\d{1,3}\b)", "<IP>"},
      {"integer", R"(\d+)", "<NUM>"},
  };
}

/// Compiled, immutable rule set. Safe to share between threads.
class Normalizer {
public:
  explicit Normalizer(std::vector<NormalizationRule> rules = default_rules())
      : rules_(std::move(rules)) {
    compiled_.reserve(rules_.size());
    for (const auto& r : rules_) {
      try {
        compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw ConfigError("normalization rule '" + r.name + "' has an invalid pattern: " +
                          e.what());
      }
    }
  }

  const std::vector<NormalizationRule>& rules() const noexcept { return rules_; }

  std::string operator()(std::string_view raw) const {
    std::string text = fold_case(raw);
    for (std::size_t i = 0; i < compiled_.size(); ++i)
      text = std::regex_replace(text, compiled_[i], rules_[i].placeholder);
    return collapse_whitespace(text);
  }

private:
  // Lowercases everything except placeholder tokens already present, so that
  // normalizing a normalized line is a no-op.
  std::string fold_case(std::string_view raw) const {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      bool kept = false;
      if (raw[i] == '<') {
        for (const auto& r : rules_) {
          if (!r.placeholder.empty() && raw.substr(i, r.placeholder.size()) == r.placeholder) {
            out.append(r.placeholder);
            i += r.placeholder.size();
            kept = true;
            break;
          }
        }
      }
      if (!kept) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
        ++i;
      }
    }
    return out;
  }

  static std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
    return out;
  }

  std::vector<NormalizationRule> rules_;
  std::vector<std::regex> compiled_;
};

inline const Normalizer& default_normalizer() {
  static const Normalizer n;
  return n;
}

inline std::string normalize_line(std::string_view raw,
                                  const std::vector<NormalizationRule>& rules) {
  return Normalizer(rules)(raw);
}

inline std::string normalize_line(std::string_view raw) { return default_normalizer()(raw); }

// ---------------------------------------------------------------------------
// Dataset files

enum class DatasetFormat { labeled_tsv, raw_lines };

namespace detail {

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace detail

/// Parses in-memory file content. Blank lines are skipped; record numbers are
/// sequential over the records produced, errors cite the physical line.
inline std::vector<LogRecord> parse_dataset_text(std::string_view content, DatasetFormat format) {
  std::vector<LogRecord> out;
  const Normalizer& norm = default_normalizer();
  std::size_t physical = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++physical;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::is_blank(line)) continue;

    LogRecord rec;
    if (format == DatasetFormat::labeled_tsv) {
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos)
        throw ParseError("line " + std::to_string(physical) + ": missing tab separator");
      const auto tag = line.substr(0, tab);
      if (tag == "0") {
        rec.label = Label::normal;
      } else if (tag == "1") {
        rec.label = Label::anomaly;
      } else {
        throw ParseError("line " + std::to_string(physical) + ": label must be 0 or 1, got '" +
                         std::string(tag) + "'");
      }
      rec.raw_text = std::string(line.substr(tab + 1));
    } else {
      rec.raw_text = std::string(line);
    }
    rec.line_no = out.size() + 1;
    rec.normalized_text = norm(rec.raw_text);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return std::move(ss).str();
}

inline std::vector<LogRecord> parse_dataset(const std::string& path, DatasetFormat format) {
  return parse_dataset_text(read_file(path), format);
}

inline std::string format_labeled_tsv(const std::vector<LogRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    if (!r.label) throw ArgumentError("record " + std::to_string(r.line_no) + " has no label");
    out += (*r.label == Label::anomaly) ? '1' : '0';
    out += '\t';
    out += r.raw_text;
    out += '\n';
  }
  return out;
}

inline void write_labeled_tsv(const std::vector<LogRecord>& records, const std::string& path) {
  const std::string text = format_labeled_tsv(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSizes {
  std::size_t train = 4000;
  std::size_t val = 500;
  std::size_t test = 500;
};

struct DatasetSplit {
  std::vector<LogRecord> train;
  std::vector<LogRecord> val;
  std::vector<LogRecord> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle followed by contiguous train/val/test slices.
inline DatasetSplit split_dataset(const std::vector<LogRecord>& records, SplitSizes sizes,
                                  std::uint64_t seed) {
  const std::size_t need = sizes.train + sizes.val + sizes.test;
  if (need > records.size())
    throw SizingError("split needs " + std::to_string(need) + " records, only " +
                      std::to_string(records.size()) + " available");
  for (const auto& r : records)
    if (!r.label)
      throw ArgumentError("split_dataset: record " + std::to_string(r.line_no) + " is unlabeled");

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  split.seed = seed;
  auto take = [&](std::size_t begin, std::size_t n, std::vector<LogRecord>& dst) {
    dst.reserve(n);
    for (std::size_t i = begin; i < begin + n; ++i) dst.push_back(records[order[i]]);
  };
  take(0, sizes.train, split.train);
  take(sizes.train, sizes.val, split.val);
  take(sizes.train + sizes.val, sizes.test, split.test);
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace detail {

// Placeholders: {blk} block id, {ip} IPv4, {port} port, {size} byte count,
// {n} small integer.
inline constexpr std::array normal_templates = {
    "Receiving block {blk} src: /{ip}:{port} dest: /{ip}:{port}",
    "Received block {blk} of size {size} from /{ip}",
    "PacketResponder {n} for block {blk} terminating",
    "BLOCK* NameSystem.addStoredBlock: blockMap updated: {ip}:{port} is added to {blk} size {size}",
    "Verification succeeded for {blk}",
    "{ip}:{port} Served block {blk} to /{ip}",
    "BLOCK* NameSystem.allocateBlock: /user/root/rand/_temporary/part-{n}. {blk}",
    "Deleting block {blk} file /mnt/hadoop/dfs/data/current/subdir{n}/{blk}",
    "BLOCK* ask {ip}:{port} to replicate {blk} to datanode(s) {ip}:{port}",
    "Replication of {blk} done on {ip}:{port}",
};

inline constexpr std::array anomaly_templates = {
    "Exception in receiveBlock for block {blk} java.io.IOException: Connection reset by peer",
    "writeBlock {blk} received exception java.io.EOFException",
    "Write failed for block {blk} to mirror {ip}:{port}",
    "Block {blk} is corrupt on datanode {ip}:{port}",
    "{ip}:{port}:DataXceiver: java.io.IOException: Broken pipe while writing {blk}",
    "Failed to transfer {blk} to {ip}:{port} got java.net.SocketTimeoutException",
    "PacketResponder {blk} {n} Exception java.io.InterruptedIOException: Interruped while waiting for IO",
    "Unexpected error trying to delete block {blk}. BlockInfo not found in volumeMap.",
    "BLOCK* NameSystem.addStoredBlock: Redundant addStoredBlock request received for {blk} on {ip}:{port} size {size} error",
    "Error reading checksum of {blk} from {ip}: checksum mismatch, block corrupt",
};

inline std::string fill_template(std::string_view tpl, std::mt19937_64& rng) {
  auto uniform = [&](std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
  };
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] != '{') {
      out.push_back(tpl[i++]);
      continue;
    }
    const auto close = tpl.find('}', i);
    const auto key = tpl.substr(i + 1, close - i - 1);
    i = close + 1;
    if (key == "blk") {
      out += "blk_";
      if (uniform(0, 1)) out += '-';
      out += std::to_string(uniform(1'000'000'000'000'000'000ULL, 9'223'372'036'854'775'807ULL));
    } else if (key == "ip") {
      out += "10." + std::to_string(uniform(0, 255)) + '.' + std::to_string(uniform(0, 255)) +
             '.' + std::to_string(uniform(1, 254));
    } else if (key == "port") {
      out += std::to_string(uniform(50000, 50100));
    } else if (key == "size") {
      out += std::to_string(uniform(1, 67'108'864));
    } else {
      out += std::to_string(uniform(0, 9));
    }
  }
  return out;
}

} // namespace detail

/// Deterministic corpus of benign and failure lines whose classes are
/// separable by vocabulary alone. Records are interleaved by a seeded shuffle.
inline std::vector<LogRecord> generate_synthetic_corpus(std::size_t n_normal, std::size_t n_anomaly,
                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LogRecord> out;
  out.reserve(n_normal + n_anomaly);
  auto emit = [&](const auto& catalog, std::size_t n, Label label) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto pick = std::uniform_int_distribution<std::size_t>(0, catalog.size() - 1)(rng);
      LogRecord r;
      r.raw_text = detail::fill_template(catalog[pick], rng);
      r.label = label;
      out.push_back(std::move(r));
    }
  };
  emit(detail::normal_templates, n_normal, Label::normal);
  emit(detail::anomaly_templates, n_anomaly, Label::anomaly);
  std::shuffle(out.begin(), out.end(), rng);

  const Normalizer& norm = default_normalizer();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].line_no = i + 1;
    out[i].normalized_text = norm(out[i].raw_text);
  }
  return out;
}

} // namespace logxai
