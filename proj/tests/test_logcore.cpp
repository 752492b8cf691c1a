#include "logxai/logcore.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <regex>
#include <set>

using namespace logxai;

TEST(Normalize, HdfsReceiveLine) {
  EXPECT_EQ(normalize_line("Received block blk_-1608999687919862906 of size 91178 from /10.250.19.102"),
            "received block <BLK> of size <NUM> from /<IP>");
}

TEST(Normalize, EmptyAndWhitespace) {
  EXPECT_EQ(normalize_line(""), "");
  EXPECT_EQ(normalize_line("   \t "), "");
  EXPECT_EQ(normalize_line("ERROR   ERROR"), "error error");
  EXPECT_EQ(normalize_line("  padded line \t"), "padded line");
}

TEST(Normalize, RuleOrderMatters) {
  // With integers first, the block id and address would lose their own placeholders.
  auto rules = default_rules();
  std::rotate(rules.begin(), rules.begin() + 2, rules.end());
  EXPECT_EQ(normalize_line("blk_42 at 10.0.0.1", rules), "blk_<NUM> at <NUM>.<NUM>.<NUM>.<NUM>");
  EXPECT_EQ(normalize_line("blk_42 at 10.0.0.1"), "<BLK> at <IP>");
}

TEST(Normalize, InvalidRuleIsConfigError) {
  EXPECT_THROW(Normalizer({{"bad", "(", "<X>"}}), ConfigError);
}

TEST(Normalize, IdempotentAndScrubbedOnCorpus) {
  const std::regex leftovers(R"(blk_-?\d|\d)");
  for (const auto& r : generate_synthetic_corpus(200, 200, 3)) {
    EXPECT_EQ(normalize_line(r.normalized_text), r.normalized_text) << r.raw_text;
    EXPECT_FALSE(std::regex_search(r.normalized_text, leftovers)) << r.normalized_text;
  }
  for (std::string s : {"Mixed CASE <NUM> and <ip>", "<BLK> x 10.1.2.3:50010", "a\tb  c"})
    EXPECT_EQ(normalize_line(normalize_line(s)), normalize_line(s)) << s;
}

TEST(Normalize, Deterministic) {
  const std::string raw = "PacketResponder 2 for block blk_123 terminating";
  EXPECT_EQ(normalize_line(raw), normalize_line(raw));
}

TEST(Parse, SingleLabeledRecord) {
  const auto recs = parse_dataset_text("1\tfailed to connect", DatasetFormat::labeled_tsv);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].line_no, 1u);
  EXPECT_EQ(recs[0].label, Label::anomaly);
  EXPECT_EQ(recs[0].normalized_text, "failed to connect");
}

TEST(Parse, EmptyContent) {
  EXPECT_TRUE(parse_dataset_text("", DatasetFormat::labeled_tsv).empty());
  EXPECT_TRUE(parse_dataset_text("\n\n  \n", DatasetFormat::raw_lines).empty());
}

TEST(Parse, ErrorNamesPhysicalLine) {
  try {
    parse_dataset_text("0\ta\n1\tb\n2\tx\n", DatasetFormat::labeled_tsv);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
  EXPECT_THROW(parse_dataset_text("no tab here", DatasetFormat::labeled_tsv), ParseError);
}

TEST(Parse, RawLinesSkipBlanksAndCarriageReturns) {
  const auto recs = parse_dataset_text("first\r\n\nsecond 12\r\n", DatasetFormat::raw_lines);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].raw_text, "first");
  EXPECT_EQ(recs[1].line_no, 2u);
  EXPECT_EQ(recs[1].normalized_text, "second <NUM>");
  EXPECT_FALSE(recs[1].label.has_value());
}

TEST(Parse, MissingFileIsIoError) {
  EXPECT_THROW(parse_dataset("/nonexistent/file.tsv", DatasetFormat::raw_lines), IoError);
}

TEST(Parse, SerializeRoundTrip) {
  fixtures::TempDir dir;
  const auto corpus = generate_synthetic_corpus(50, 30, 9);
  write_labeled_tsv(corpus, dir.str("c.tsv"));
  EXPECT_EQ(parse_dataset(dir.str("c.tsv"), DatasetFormat::labeled_tsv), corpus);
}

TEST(Split, BenchmarkSizes) {
  const auto corpus = generate_synthetic_corpus(2500, 2500, 1);
  const auto s = split_dataset(corpus, {}, 42);
  EXPECT_EQ(s.train.size(), 4000u);
  EXPECT_EQ(s.val.size(), 500u);
  EXPECT_EQ(s.test.size(), 500u);
  std::set<std::size_t> seen;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (const auto& r : *part) EXPECT_TRUE(seen.insert(r.line_no).second);
}

TEST(Split, ZeroSizesAndDeterminism) {
  const auto corpus = generate_synthetic_corpus(20, 20, 1);
  const auto empty = split_dataset(corpus, {0, 0, 0}, 1);
  EXPECT_TRUE(empty.train.empty() && empty.val.empty() && empty.test.empty());
  const auto a = split_dataset(corpus, {10, 5, 5}, 77);
  const auto b = split_dataset(corpus, {10, 5, 5}, 77);
  EXPECT_EQ(format_labeled_tsv(a.train) + format_labeled_tsv(a.val) + format_labeled_tsv(a.test),
            format_labeled_tsv(b.train) + format_labeled_tsv(b.val) + format_labeled_tsv(b.test));
  const auto c = split_dataset(corpus, {10, 5, 5}, 78);
  EXPECT_NE(format_labeled_tsv(a.train), format_labeled_tsv(c.train));
}

TEST(Split, SizingErrorStatesCounts) {
  const auto corpus = generate_synthetic_corpus(5, 5, 1);
  try {
    split_dataset(corpus, {8, 2, 1}, 0);
    FAIL();
  } catch (const SizingError& e) {
    EXPECT_NE(std::string(e.what()).find("11"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}

TEST(Split, RejectsUnlabeled) {
  auto recs = parse_dataset_text("a\nb\n", DatasetFormat::raw_lines);
  EXPECT_THROW(split_dataset(recs, {1, 0, 0}, 0), ArgumentError);
}

TEST(Synthetic, CountsLabelsDeterminism) {
  const auto ten = generate_synthetic_corpus(10, 0, 1);
  ASSERT_EQ(ten.size(), 10u);
  for (const auto& r : ten) EXPECT_EQ(r.label, Label::normal);
  EXPECT_TRUE(generate_synthetic_corpus(0, 0, 123).empty());
  EXPECT_EQ(generate_synthetic_corpus(100, 100, 7), generate_synthetic_corpus(100, 100, 7));
  EXPECT_NE(generate_synthetic_corpus(100, 100, 7), generate_synthetic_corpus(100, 100, 8));
  const auto mixed = generate_synthetic_corpus(30, 20, 2);
  std::size_t anomalies = 0;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    EXPECT_EQ(mixed[i].line_no, i + 1);
    anomalies += *mixed[i].label == Label::anomaly;
  }
  EXPECT_EQ(anomalies, 20u);
}

TEST(Synthetic, ClassesAreLexicallySeparable) {
  std::set<std::string> normal, anomaly;
  for (const auto& r : generate_synthetic_corpus(500, 500, 4))
    (*r.label == Label::normal ? normal : anomaly).insert(r.normalized_text);
  for (const auto& s : normal) EXPECT_FALSE(anomaly.contains(s)) << s;
}

TEST(Labels, StringRoundTrip) {
  for (Label l : {Label::normal, Label::anomaly}) EXPECT_EQ(label_from_string(to_string(l)), l);
  EXPECT_FALSE(label_from_string("maybe").has_value());
}
