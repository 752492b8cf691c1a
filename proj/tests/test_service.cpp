#include "logxai/service/http.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace logxai;
using namespace logxai::service;
using nlohmann::json;

namespace {

struct Upload {
  std::string text;
  std::size_t anomalies = 0;
  std::size_t lines = 0;
};

Upload upload_text(std::size_t normal, std::size_t anomaly, std::uint64_t seed) {
  Upload u;
  for (const auto& r : generate_synthetic_corpus(normal, anomaly, seed)) {
    u.text += r.raw_text + "\n";
    u.anomalies += *r.label == Label::anomaly;
    ++u.lines;
  }
  return u;
}

ServiceConfig test_config(const std::string& store) {
  ServiceConfig c;
  c.store_path = store;
  c.ig_steps = 128;
  c.max_upload_bytes = 64 * 1024;
  return c;
}

std::unique_ptr<Service> make_service(const std::string& store, bool with_model = true) {
  return std::make_unique<Service>(test_config(store), std::make_shared<FileStore>(store),
                                   with_model ? std::optional(fixtures::small_model()) : std::nullopt,
                                   reportgen::default_catalog(), default_questionnaire());
}

json good_feedback(const std::string& id) {
  return {{"session_id", id},
          {"profession", "SRE"},
          {"education", "Master's"},
          {"answers", {{"q1", "easy"}, {"q8", "moderate"}}},
          {"free_text", "works"}};
}

// Wraps a FileStore and fails analysis commits on demand.
class FlakyStore : public DocumentStore {
public:
  explicit FlakyStore(std::shared_ptr<FileStore> inner) : inner_(std::move(inner)) {}
  bool fail_writes = true;

  void create_session(const std::string& id, const json& meta, std::string_view input) override {
    inner_->create_session(id, meta, input);
  }
  std::string read_input(const std::string& id) const override { return inner_->read_input(id); }
  void write_analysis(const std::string& id, const std::vector<std::string>& lines) override {
    if (fail_writes) throw IoError("disk full");
    inner_->write_analysis(id, lines);
  }
  void append_interaction(const std::string& id, const InteractionLogEntry& e) override {
    inner_->append_interaction(id, e);
  }
  void append_feedback(const std::string& id, const json& f) override { inner_->append_feedback(id, f); }
  std::vector<std::string> session_ids() const override { return inner_->session_ids(); }
  StoredSession load(const std::string& id) const override { return inner_->load(id); }
  std::vector<InteractionLogEntry> store_interactions() const override {
    return inner_->store_interactions();
  }

private:
  std::shared_ptr<FileStore> inner_;
};

} // namespace

TEST(Create, SessionBasics) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  const auto r = svc->create_session("a\nb\nc\n", "three.log");
  ASSERT_EQ(r.status, 201);
  EXPECT_EQ(r.body.at("line_count"), 3);
  EXPECT_EQ(r.body.at("status"), "Uploaded");
  EXPECT_EQ(r.body.at("source_filename"), "three.log");
  const std::string id = r.body.at("session_id");
  EXPECT_EQ(id.size(), 36u);
  EXPECT_EQ(read_file(dir.str("sessions/" + id + "/input.log")), "a\nb\nc\n");
  const auto again = svc->create_session("a\nb\nc\n", "three.log");
  EXPECT_NE(again.body.at("session_id"), r.body.at("session_id"));
}

TEST(Create, RejectsBadUploads) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  EXPECT_EQ(svc->create_session("", "x").status, 400);
  EXPECT_EQ(svc->create_session("\n \n", "x").status, 400);
  EXPECT_EQ(svc->create_session(std::string(70 * 1024, 'a'), "x").status, 413);
  const auto bad = svc->create_session("ok\n\xff\xfe\n", "x");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body.at("code"), "invalid_encoding");
  EXPECT_EQ(svc->create_session("caf\xc3\xa9\n", "x").status, 201);
  EXPECT_EQ(svc->create_session("cut \xc3", "x").status, 400);
}

TEST(Analyze, StateMachineAndResults) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  const auto up = upload_text(6, 4, 21);
  const std::string id = svc->create_session(up.text, "u.log").body.at("session_id");

  EXPECT_EQ(svc->analyze_session("no-such-session").status, 404);
  EXPECT_EQ(svc->get_results(id).status, 409);
  EXPECT_EQ(svc->get_line_attention(id, 1).status, 409);

  const auto r = svc->analyze_session(id);
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("status"), "Done");
  EXPECT_EQ(r.body.at("results").size(), up.lines);
  EXPECT_EQ(r.body.at("anomaly_count"), up.anomalies);
  for (std::size_t k = 0; k < up.lines; ++k) EXPECT_EQ(r.body["results"][k].at("line_no"), k + 1);
  EXPECT_EQ(svc->analyze_session(id).status, 409);
  EXPECT_EQ(svc->get_results(id).body, r.body);
  EXPECT_EQ(svc->session(id)->status, SessionStatus::done);
}

TEST(Analyze, ModelUnavailable) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str(), false);
  const std::string id = svc->create_session("x\n", "x").body.at("session_id");
  const auto r = svc->analyze_session(id);
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.body.at("code"), "model_unavailable");
  EXPECT_EQ(svc->session(id)->status, SessionStatus::uploaded);
}

TEST(Analyze, StoreFailureMarksSessionFailed) {
  fixtures::TempDir dir;
  auto store = std::make_shared<FlakyStore>(std::make_shared<FileStore>(dir.str()));
  Service svc(test_config(dir.str()), store, fixtures::small_model(), reportgen::default_catalog(),
              default_questionnaire());
  const std::string id = svc.create_session("block served\n", "x").body.at("session_id");
  const auto r = svc.analyze_session(id);
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(r.body.at("code"), "analysis_failed");
  EXPECT_NE(r.body.at("message").get<std::string>().find("disk full"), std::string::npos);
  EXPECT_EQ(svc.session(id)->status, SessionStatus::failed);
  EXPECT_EQ(svc.analyze_session(id).status, 409);
  EXPECT_EQ(replay(svc.interactions(id)), svc.live_state(id));
}

TEST(Lines, AttentionPayload) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  const auto up = upload_text(3, 2, 5);
  const std::string id = svc->create_session(up.text, "u.log").body.at("session_id");
  ASSERT_EQ(svc->analyze_session(id).status, 200);
  const auto& cfg = fixtures::small_model().params.config;
  for (std::size_t n = 1; n <= up.lines; ++n) {
    const auto r = svc->get_line_attention(id, n);
    ASSERT_EQ(r.status, 200);
    const auto& b = r.body;
    EXPECT_EQ(b.at("line_no"), n);
    EXPECT_EQ(b.at("tokens")[0], "<s>");
    EXPECT_EQ(b.at("dims").at("layers"), cfg.num_layers);
    EXPECT_EQ(b.at("dims").at("heads"), cfg.num_heads);
    const std::size_t seq = b.at("dims").at("seq_len");
    EXPECT_EQ(b.at("tokens").size(), seq);
    const auto& att = b.at("attentions");
    ASSERT_EQ(att.size(), cfg.num_layers);
    for (const auto& layer : att) {
      ASSERT_EQ(layer.size(), cfg.num_heads);
      for (const auto& head : layer) {
        ASSERT_EQ(head.size(), seq);
        for (const auto& row : head) {
          double sum = 0.0;
          for (const auto& v : row) sum += v.get<double>();
          EXPECT_NEAR(sum, 1.0, 1e-6);
        }
      }
    }
  }
  EXPECT_EQ(svc->get_line_attention(id, 0).status, 404);
  EXPECT_EQ(svc->get_line_attention(id, up.lines + 1).status, 404);
  EXPECT_EQ(svc->get_line_report("nope", 1).status, 404);
}

TEST(Lines, ReportPayloadConsistency) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  const auto up = upload_text(3, 3, 8);
  const std::string id = svc->create_session(up.text, "u.log").body.at("session_id");
  ASSERT_EQ(svc->analyze_session(id).status, 200);
  const auto& model = fixtures::small_model();
  const auto records = parse_dataset_text(up.text, DatasetFormat::raw_lines);
  for (std::size_t n = 1; n <= up.lines; ++n) {
    const auto r = svc->get_line_report(id, n);
    ASSERT_EQ(r.status, 200);
    const std::string text = r.body.at("report_text");
    const auto summary = r.body.at("summary").get<attnlysis::AnalysisSummary>();
    EXPECT_EQ(text, reportgen::render_analysis_report(summary).text);
    if (summary.bias_warnings.empty()) EXPECT_TRUE(text.ends_with("Special Token Bias Warnings:\n  None\n"));
    const auto parsed = reportgen::parse_analysis_report(text);
    ASSERT_EQ(parsed.heads.size(), summary.focused_heads.size());
    for (std::size_t k = 0; k < parsed.heads.size(); ++k)
      EXPECT_NEAR(parsed.heads[k].avg_entropy, summary.focused_heads[k].avg_entropy, 5e-4);

    // Completeness against logits recomputed here, not taken from the payload.
    const auto attr = r.body.at("attribution").get<encoder::TokenAttribution>();
    const auto& norm = records[n - 1].normalized_text;
    const auto tok = encoder::tokenize(norm, model.vocab, model.params.config.max_seq_len);
    const auto in = encoder::forward(model.params, encoder::embed_tokens(model.params, tok.ids)).logits;
    const std::vector<int> pads(tok.ids.size(), encoder::pad_id);
    const auto base = encoder::forward(model.params, encoder::embed_tokens(model.params, pads)).logits;
    const double gap = in(attr.target_class) - base(attr.target_class);
    double sum = 0.0;
    for (double s : attr.scores) sum += s;
    EXPECT_LE(std::abs(sum - gap), 0.02 * std::abs(gap) + 1e-6);

    const auto resp = r.body.at("response").get<reportgen::DetectionResponse>();
    EXPECT_EQ(resp.event, norm);
    EXPECT_EQ(resp.verdict == Label::anomaly, !resp.possible_causes.empty());
  }
}

TEST(Feedback, Validation) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  const std::string id = svc->create_session("x\n", "x").body.at("session_id");
  EXPECT_EQ(svc->post_feedback(good_feedback(id).dump()).status, 201);
  EXPECT_EQ(svc->post_feedback("{not json").status, 400);
  EXPECT_EQ(svc->post_feedback(good_feedback("missing").dump()).status, 404);
  auto fb = good_feedback(id);
  fb["answers"]["q99"] = "yes";
  EXPECT_EQ(svc->post_feedback(fb.dump()).status, 400);
  fb = good_feedback(id);
  fb["answers"]["q1"] = "sideways";
  EXPECT_EQ(svc->post_feedback(fb.dump()).status, 400);
  fb = good_feedback(id);
  fb.erase("profession");
  EXPECT_EQ(svc->post_feedback(fb.dump()).status, 400);
  fb = good_feedback(id);
  fb.erase("session_id");
  EXPECT_EQ(svc->post_feedback(fb.dump()).status, 400);
  EXPECT_EQ(svc->live_state(id)->feedback_count, 1u);
  const auto lines = read_file(dir.str("sessions/" + id + "/feedback.jsonl"));
  EXPECT_EQ(json::parse(lines.substr(0, lines.find('\n'))).at("profession"), "SRE");
}

TEST(InteractionLog, ReplayMatchesLiveStateAndTimestampsMonotone) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  const std::string id = svc->create_session(upload_text(2, 1, 3).text, "x").body.at("session_id");
  EXPECT_EQ(replay(svc->interactions(id)), svc->live_state(id));
  svc->get_results(id);
  svc->post_feedback(good_feedback(id).dump());
  EXPECT_EQ(replay(svc->interactions(id)), svc->live_state(id));
  svc->analyze_session(id);
  svc->analyze_session(id);
  svc->get_line_report(id, 2);
  svc->get_line_attention(id, 9);
  svc->post_feedback(good_feedback(id).dump());
  auto fb = good_feedback(id);
  fb["answers"]["q1"] = "bogus";
  svc->post_feedback(fb.dump());
  EXPECT_EQ(replay(svc->interactions(id)), svc->live_state(id));
  EXPECT_EQ(svc->live_state(id)->feedback_count, 2u);

  const auto log = svc->interactions(id);
  ASSERT_EQ(log.size(), 9u);
  EXPECT_EQ(log.front().endpoint, endpoint::create);
  EXPECT_EQ(log[4].outcome, "conflict");
  EXPECT_EQ(log[6].http_status, 404);
  for (std::size_t k = 1; k < log.size(); ++k) EXPECT_LE(log[k - 1].timestamp_ms, log[k].timestamp_ms);

  // The durable log holds the same entries.
  EXPECT_EQ(FileStore(dir.str()).load(id).interactions, log);
}

TEST(Durability, RestartPreservesPayloadsBitExact) {
  fixtures::TempDir dir;
  const auto up = upload_text(4, 3, 13);
  std::string id, results, attention, report, session;
  std::vector<InteractionLogEntry> log;
  {
    auto svc = make_service(dir.str());
    id = svc->create_session(up.text, "u.log").body.at("session_id");
    ASSERT_EQ(svc->analyze_session(id).status, 200);
    svc->post_feedback(good_feedback(id).dump());
    results = svc->get_results(id).body.dump();
    attention = svc->get_line_attention(id, 3).body.dump();
    report = svc->get_line_report(id, 5).body.dump();
    session = svc->get_session(id).body.dump();
    log = svc->interactions(id);
  }
  auto svc = make_service(dir.str());
  EXPECT_EQ(svc->interactions(id), log);
  EXPECT_EQ(svc->live_state(id), (ReplayedState{SessionStatus::done, 1}));
  EXPECT_EQ(svc->get_results(id).body.dump(), results);
  EXPECT_EQ(svc->get_line_attention(id, 3).body.dump(), attention);
  EXPECT_EQ(svc->get_line_report(id, 5).body.dump(), report);
  EXPECT_EQ(svc->get_session(id).body.dump(), session);
  EXPECT_EQ(svc->analyze_session(id).status, 409);
}

TEST(Concurrency, ParallelAnalysesStayIsolated) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  std::vector<std::string> ids;
  std::vector<Upload> ups;
  for (int k = 0; k < 4; ++k) {
    ups.push_back(upload_text(3 + k, 2, 100 + k));
    ids.push_back(svc->create_session(ups.back().text, "p.log").body.at("session_id"));
  }
  std::vector<std::thread> threads;
  std::vector<int> status(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k)
    threads.emplace_back([&, k] {
      status[k] = svc->analyze_session(ids[k]).status;
      for (int rep = 0; rep < 5; ++rep) svc->get_session(ids[k]);
    });
  for (auto& t : threads) t.join();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    EXPECT_EQ(status[k], 200);
    std::size_t expected_line = 1;
    for (const auto& l : FileStore(dir.str()).load(ids[k]).analysis_lines) {
      const auto doc = json::parse(l);
      EXPECT_EQ(doc.at("session_id"), ids[k]);
      EXPECT_EQ(doc.at("line_no"), expected_line++);
    }
    EXPECT_EQ(expected_line - 1, ups[k].lines);
    EXPECT_EQ(replay(svc->interactions(ids[k])), svc->live_state(ids[k]));
  }
}

TEST(Config, FileAndEnvironmentOverrides) {
  fixtures::TempDir dir;
  {
    std::ofstream(dir.str("svc.json")) << R"({"port": 9000, "store_path": "/tmp/a", "ig_steps": 16})";
  }
  std::map<std::string, std::string> env{{"LOGXAI_PORT", "9100"}, {"LOGXAI_CHECKPOINT", "/m.json"}};
  auto lookup = [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    return it == env.end() ? std::nullopt : std::optional(it->second);
  };
  const auto c = load_service_config(dir.str("svc.json"), lookup);
  EXPECT_EQ(c.port, 9100);
  EXPECT_EQ(c.store_path, "/tmp/a");
  EXPECT_EQ(c.checkpoint_path, "/m.json");
  EXPECT_EQ(c.ig_steps, 16u);
  env["LOGXAI_PORT"] = "eighty";
  EXPECT_THROW(load_service_config({}, lookup), ConfigError);
  env["LOGXAI_PORT"] = "70000";
  EXPECT_THROW(load_service_config({}, lookup), ConfigError);
  EXPECT_NO_THROW(load_service_config(std::string(LOGXAI_DATA_DIR) + "/service.json", [](const std::string&) {
    return std::optional<std::string>{};
  }));
}

TEST(Config, ShippedQuestionnaireMatchesBuiltIn) {
  const auto q = load_questionnaire(std::string(LOGXAI_DATA_DIR) + "/questionnaire.json");
  const auto d = default_questionnaire();
  ASSERT_EQ(q.questions.size(), 12u);
  ASSERT_EQ(d.questions.size(), 12u);
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(q.questions[k].id, d.questions[k].id);
    EXPECT_EQ(q.questions[k].choices, d.questions[k].choices);
  }
  EXPECT_THROW(questionnaire_from_json(json::parse(R"({"questions": []})")), ConfigError);
}

TEST(Utf8, Validator) {
  EXPECT_TRUE(service::detail::valid_utf8("plain"));
  EXPECT_TRUE(service::detail::valid_utf8("\xe2\x82\xac \xf0\x9f\x98\x80"));
  EXPECT_FALSE(service::detail::valid_utf8("\xe2\x82"));
  EXPECT_FALSE(service::detail::valid_utf8("\xc0\xaf"));
  EXPECT_FALSE(service::detail::valid_utf8("\xed\xa0\x80"));
}

TEST(Http, EndToEndOverLoopback) {
  fixtures::TempDir dir;
  auto svc = make_service(dir.str());
  HttpServer server(*svc);
  const int port = server.bind("127.0.0.1", 0);
  server.start_background();
  httplib::Client cli("127.0.0.1", port);

  const auto up = upload_text(3, 2, 44);
  auto res = cli.Post("/sessions?filename=h.log", up.text, "text/plain");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = json::parse(res->body).at("session_id");

  res = cli.Get("/sessions/" + id + "/results");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body).at("code"), "conflict");

  res = cli.Post("/sessions/" + id + "/analyze", "", "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("anomaly_count"), up.anomalies);

  res = cli.Get("/sessions/" + id);
  EXPECT_EQ(json::parse(res->body).at("status"), "Done");
  res = cli.Get("/sessions/" + id + "/lines/2/attention");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(json::parse(res->body).at("line_no"), 2);
  res = cli.Get("/sessions/" + id + "/lines/1/report");
  ASSERT_EQ(res->status, 200);
  EXPECT_TRUE(json::parse(res->body).contains("report_text"));
  res = cli.Get("/sessions/" + id + "/lines/99/report");
  EXPECT_EQ(res->status, 404);
  res = cli.Post("/feedback", good_feedback(id).dump(), "application/json");
  EXPECT_EQ(res->status, 201);

  res = cli.Get("/nowhere");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body).at("code"), "not_found");
  res = cli.Post("/sessions", std::string(100 * 1024, 'x'), "text/plain");
  EXPECT_EQ(res->status, 413);
  EXPECT_EQ(json::parse(res->body).at("code"), "payload_too_large");
  res = cli.Options("/sessions");
  EXPECT_EQ(res->status, 204);
  EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
  server.stop();
}
