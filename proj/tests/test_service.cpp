#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "poal/service.hpp"

// after Eigen: <resolv.h> defines _res
#include "httplib.h"

namespace poal {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string s; std::getline(in, s);)
    if (!s.empty()) out.push_back(s);
  return out;
}

// Three datasets: `tiny` has the pairs (1,2) and (2,1) with 1 < 2; `chain`
// has every pair over 1..4 with 1 < 2 and 3 < 4; `gen` is synthetic.
class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("poal_svc_" + std::to_string(std::random_device{}()));
    data_ = root_ / "data";
    logs_ = root_ / "logs";
    fs::create_directories(data_ / "tiny");
    write_file(data_ / "tiny" / "edges.csv", "src,dst\n1,2\n");
    write_file(data_ / "tiny" / "features.csv", "src,dst,f\n1,2,0.5\n2,1,-0.5\n");
    write_file(data_ / "tiny" / "names.csv", "id,name\n1,limits\n2,derivatives\n");

    fs::create_directories(data_ / "chain");
    write_file(data_ / "chain" / "edges.csv", "1,2\n3,4\n");
    std::string feats;
    for (int a = 1; a <= 4; ++a)
      for (int b = 1; b <= 4; ++b)
        if (a != b) feats += std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(a - b) + "\n";
    write_file(data_ / "chain" / "features.csv", feats);

    SyntheticParams p;
    p.num_nodes = 10;
    p.num_layers = 3;
    p.edge_prob = 0.5;
    p.seed = 4;
    save_pool(generate_synthetic(p), data_ / "gen");

    svc_ = std::make_unique<OracleService>(ServiceOptions{data_, logs_});
  }
  void TearDown() override {
    svc_.reset();
    fs::remove_all(root_);
  }

  std::string create(const json& req) {
    const ServiceReply r = svc_->create_session(req);
    EXPECT_EQ(r.status, 200) << r.body.dump();
    return r.body.value("id", "");
  }

  // Answers `rounds` queries with the ground truth of `gen`.
  void answer(const std::string& id, std::size_t rounds) {
    const auto pool = svc_->dataset("gen");
    for (std::size_t i = 0; i < rounds; ++i) {
      const ServiceReply q = svc_->next_query(id);
      ASSERT_EQ(q.status, 200);
      if (q.body["exhausted"].get<bool>()) return;
      const Pair p{q.body["src"].get<NodeId>(), q.body["dst"].get<NodeId>()};
      const ServiceReply r =
          svc_->submit_label(id, {{"src", p.src}, {"dst", p.dst}, {"label", to_int(oracle_label(pool->truth(), p))}});
      ASSERT_EQ(r.status, 200) << r.body.dump();
    }
  }

  fs::path root_, data_, logs_;
  std::unique_ptr<OracleService> svc_;
};

// ---------------------------------------------------------------------------
// Sessions

TEST_F(ServiceTest, CreateValidatesTheRequest) {
  EXPECT_EQ(svc_->create_session(json::array()).status, 400);
  EXPECT_EQ(svc_->create_session({{"strategy", "lc"}}).status, 400);
  EXPECT_EQ(svc_->create_session({{"dataset", "nope"}}).status, 400);
  EXPECT_EQ(svc_->create_session({{"dataset", "../data"}}).status, 400);
  EXPECT_EQ(svc_->create_session({{"dataset", "gen"}, {"strategy", "smart"}}).status, 400);
  EXPECT_EQ(svc_->create_session({{"dataset", "gen"}, {"strategy", "cnt"}, {"no_reasoning", true}}).status, 400);
  EXPECT_EQ(svc_->create_session({{"dataset", "gen"}, {"budget", "lots"}}).status, 400);
  const json bad_seeds{{"dataset", "chain"},
                       {"seed_labels", {{{"src", 1}, {"dst", 2}, {"label", 1}}, {{"src", 2}, {"dst", 1}, {"label", 1}}}}};
  const ServiceReply r = svc_->create_session(bad_seeds);
  EXPECT_EQ(r.status, 400);
  EXPECT_TRUE(r.body.contains("conflict"));
  EXPECT_TRUE(svc_->session_ids().empty());
}

TEST_F(ServiceTest, CreateReturnsIdAndStats) {
  const ServiceReply r = svc_->create_session({{"dataset", "gen"}, {"strategy", "qbc-r+"}, {"budget", 12}});
  ASSERT_EQ(r.status, 200);
  const std::string id = r.body["id"];
  EXPECT_EQ(r.body["stats"]["strategy"], "QBC-R+");
  EXPECT_EQ(r.body["stats"]["queries_used"], 0);
  EXPECT_EQ(r.body["stats"]["budget"], 12);
  EXPECT_EQ(r.body["stats"]["status"], "active");
  EXPECT_TRUE(r.body["stats"].contains("bounds"));
  const std::string other = create({{"dataset", "gen"}});
  EXPECT_NE(id, other);
  const auto lines = read_lines(logs_ / (id + ".jsonl"));
  ASSERT_EQ(lines.size(), 1u);
  const json h = json::parse(lines[0]);
  EXPECT_EQ(h["event"], "session");
  EXPECT_EQ(h["strategy"], "qbc-r+");
}

TEST_F(ServiceTest, SeedsAreDrawnFromTheTruth) {
  const ServiceReply r = svc_->create_session({{"dataset", "gen"}, {"seeds", 5}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["stats"]["seeds"], 5);
  EXPECT_GE(r.body["stats"]["labeled_total"].get<int>(), 5);
}

TEST_F(ServiceTest, NextIsPure) {
  const std::string id = create({{"dataset", "tiny"}, {"strategy", "lc"}});
  const ServiceReply a = svc_->next_query(id);
  const ServiceReply b = svc_->next_query(id);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(a.body["query_index"], 1);
  EXPECT_EQ(svc_->stats(id).body["queries_used"], 0);
  // With no labels every candidate ties; the smallest pair wins.
  EXPECT_EQ(a.body["src"], 1);
  EXPECT_EQ(a.body["dst"], 2);
  EXPECT_EQ(a.body["src_name"], "limits");
  EXPECT_EQ(a.body["dst_name"], "derivatives");
}

TEST_F(ServiceTest, PositiveLabelDeducesTheReverse) {
  const std::string id = create({{"dataset", "tiny"}, {"strategy", "lc"}});
  svc_->next_query(id);
  const ServiceReply r = svc_->submit_label(id, {{"src", 1}, {"dst", 2}, {"label", 1}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["accepted"], true);
  ASSERT_EQ(r.body["deduced"].size(), 1u);
  EXPECT_EQ(r.body["deduced"][0]["src"], 2);
  EXPECT_EQ(r.body["deduced"][0]["dst"], 1);
  EXPECT_EQ(r.body["deduced"][0]["label"], -1);
  EXPECT_EQ(r.body["deduced"][0]["rule"], "R");
  EXPECT_EQ(r.body["stats"]["labeled_total"], 2);
  EXPECT_EQ(r.body["stats"]["deduced_total"], 1);
  EXPECT_EQ(r.body["stats"]["status"], "exhausted");

  const ServiceReply n = svc_->next_query(id);
  EXPECT_EQ(n.status, 200);
  EXPECT_EQ(n.body["exhausted"], true);
  EXPECT_EQ(svc_->submit_label(id, {{"src", 2}, {"dst", 1}, {"label", -1}}).status, 409);
}

TEST_F(ServiceTest, PlainSessionDeducesNothing) {
  const std::string id = create({{"dataset", "tiny"}, {"strategy", "lc"}, {"no_reasoning", true}});
  svc_->next_query(id);
  const ServiceReply r = svc_->submit_label(id, {{"src", 1}, {"dst", 2}, {"label", 1}});
  ASSERT_EQ(r.status, 200);
  EXPECT_TRUE(r.body["deduced"].empty());
  EXPECT_EQ(r.body["stats"]["remaining"], 1);
}

TEST_F(ServiceTest, ZeroBudgetIsExhausted) {
  const std::string id = create({{"dataset", "gen"}, {"budget", 0}});
  const ServiceReply n = svc_->next_query(id);
  EXPECT_EQ(n.body["exhausted"], true);
  EXPECT_EQ(n.body["status"], "exhausted");
}

TEST_F(ServiceTest, StalePairIsRejected) {
  const std::string id = create({{"dataset", "gen"}, {"strategy", "lc-r+"}});
  const ServiceReply q = svc_->next_query(id);
  const Pair served{q.body["src"].get<NodeId>(), q.body["dst"].get<NodeId>()};
  const auto pool = svc_->dataset("gen");
  Pair other = pool->pair(0) == served ? pool->pair(1) : pool->pair(0);
  const ServiceReply r = svc_->submit_label(
      id, {{"src", other.src}, {"dst", other.dst}, {"label", to_int(oracle_label(pool->truth(), other))}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["served"]["src"], served.src);
  EXPECT_EQ(svc_->stats(id).body["queries_used"], 0);
  EXPECT_EQ(svc_->next_query(id).body, q.body);
}

TEST_F(ServiceTest, ContradictionMarksTheSessionConflicted) {
  const json req{{"dataset", "chain"},
                 {"strategy", "lc-r+"},
                 {"seed_labels",
                  {{{"src", 1}, {"dst", 2}, {"label", 1}},
                   {{"src", 3}, {"dst", 4}, {"label", 1}},
                   {{"src", 1}, {"dst", 4}, {"label", -1}}}}};
  const std::string id = create(req);
  const ServiceReply r = svc_->submit_label(id, {{"src", 2}, {"dst", 3}, {"label", 1}});
  ASSERT_EQ(r.status, 409);
  const json& c = r.body["conflict"];
  EXPECT_EQ(c["trigger"]["src"], 2);
  EXPECT_EQ(c["trigger"]["dst"], 3);
  EXPECT_EQ(c["existing_label"], -1);
  EXPECT_TRUE(c.contains("pair"));
  EXPECT_TRUE(c.contains("existing_source"));
  EXPECT_TRUE(c.contains("rule"));
  EXPECT_FALSE(c["message"].get<std::string>().empty());
  EXPECT_EQ(svc_->stats(id).body["status"], "conflicted");
  EXPECT_EQ(svc_->next_query(id).status, 409);
  EXPECT_EQ(svc_->submit_label(id, {{"src", 2}, {"dst", 3}, {"label", -1}}).status, 409);
  EXPECT_EQ(json::parse(read_lines(logs_ / (id + ".jsonl")).back())["event"], "conflict");
}

TEST_F(ServiceTest, UnknownSessionAndBadBodies) {
  EXPECT_EQ(svc_->next_query("missing").status, 404);
  EXPECT_EQ(svc_->stats("missing").status, 404);
  EXPECT_EQ(svc_->submit_label("missing", {{"src", 1}, {"dst", 2}, {"label", 1}}).status, 404);
  EXPECT_FALSE(svc_->log_text("missing").has_value());
  const std::string id = create({{"dataset", "tiny"}});
  EXPECT_EQ(svc_->submit_label(id, {{"src", 1}, {"dst", 2}}).status, 400);
  EXPECT_EQ(svc_->submit_label(id, {{"src", 1}, {"dst", 2}, {"label", 0}}).status, 400);
  EXPECT_EQ(svc_->submit_label(id, {{"src", "a"}, {"dst", 2}, {"label", 1}}).status, 400);
}

TEST_F(ServiceTest, StatsAccountForEveryLabel) {
  const std::string id = create({{"dataset", "gen"}, {"strategy", "lc-r+"}, {"seeds", 4}, {"budget", 25}});
  const auto pool = svc_->dataset("gen");
  std::size_t deduced_seen = svc_->stats(id).body["deduced_total"];
  for (int i = 0; i < 25; ++i) {
    const ServiceReply q = svc_->next_query(id);
    if (q.body["exhausted"].get<bool>()) break;
    const Pair p{q.body["src"].get<NodeId>(), q.body["dst"].get<NodeId>()};
    const ServiceReply r =
        svc_->submit_label(id, {{"src", p.src}, {"dst", p.dst}, {"label", to_int(oracle_label(pool->truth(), p))}});
    ASSERT_EQ(r.status, 200);
    deduced_seen += r.body["deduced"].size();
    const json& s = r.body["stats"];
    EXPECT_EQ(s["labeled_total"].get<std::size_t>(),
              s["queries_used"].get<std::size_t>() + s["seeds"].get<std::size_t>() +
                  s["deduced_total"].get<std::size_t>());
    EXPECT_EQ(s["deduced_total"].get<std::size_t>(), deduced_seen);
    std::size_t by_rule = 0;
    for (const auto& [k, v] : s["per_rule"].items()) by_rule += v.get<std::size_t>();
    EXPECT_EQ(by_rule, deduced_seen);
    for (const auto& d : r.body["deduced"])
      EXPECT_EQ(d["label"].get<int>(), to_int(oracle_label(pool->truth(), {d["src"], d["dst"]})));
  }
}

// ---------------------------------------------------------------------------
// Logs

TEST_F(ServiceTest, ReplayRebuildsTheSession) {
  const std::string id = create({{"dataset", "gen"}, {"strategy", "qbc-r+"}, {"seeds", 3}, {"budget", 20}});
  answer(id, 20);
  const json live = svc_->stats(id).body;
  const auto pool = svc_->dataset("gen");
  const fs::path log = logs_ / (id + ".jsonl");

  const auto a = replay(log, pool, id);
  const auto b = replay(log, pool, id);
  EXPECT_EQ(a->stats(), live);
  EXPECT_EQ(dump_closure_jsonl(a->closure()), dump_closure_jsonl(b->closure()));

  // Human labels in another order give the same closure.
  auto lines = read_lines(log);
  std::vector<std::string> head, human;
  for (const auto& l : lines) {
    const json e = json::parse(l);
    if (e["event"] == "label" && e["source"] == "human") human.push_back(l);
    else if (e["event"] != "deduced") head.push_back(l);
  }
  ASSERT_GT(human.size(), 3u);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(human.begin(), human.end(), rng);
    const fs::path shuffled = root_ / ("shuffled_" + std::to_string(k) + ".jsonl");
    std::ofstream out(shuffled);
    for (const auto& l : head) out << l << '\n';
    for (const auto& l : human) out << l << '\n';
    out.close();
    EXPECT_TRUE(replay(shuffled, pool, id)->closure().same_labels(a->closure()));
  }
}

TEST_F(ServiceTest, HeaderOnlyLogIsAFreshSession) {
  const std::string id = create({{"dataset", "gen"}, {"budget", 7}});
  const auto s = replay(logs_ / (id + ".jsonl"), svc_->dataset("gen"), id);
  EXPECT_EQ(s->queries_used(), 0u);
  EXPECT_EQ(s->closure().size(), 0u);
  EXPECT_EQ(s->settings().budget, 7u);
}

TEST_F(ServiceTest, ReplayRejectsBadLogs) {
  const std::string id = create({{"dataset", "gen"}});
  answer(id, 3);
  const fs::path log = logs_ / (id + ".jsonl");
  EXPECT_THROW(replay(log, svc_->dataset("tiny"), id), std::runtime_error);
  std::ofstream(log, std::ios::app) << "{not json\n";
  EXPECT_THROW(replay(log, svc_->dataset("gen"), id), std::runtime_error);
  write_file(root_ / "empty.jsonl", "");
  EXPECT_THROW(replay(root_ / "empty.jsonl", svc_->dataset("gen"), id), std::runtime_error);
}

TEST_F(ServiceTest, ResumeRestoresSessions) {
  const std::string a = create({{"dataset", "gen"}, {"strategy", "lc-r+"}, {"budget", 15}});
  const std::string b = create({{"dataset", "tiny"}, {"strategy", "random"}});
  answer(a, 6);
  const json sa = svc_->stats(a).body, sb = svc_->stats(b).body;
  const json next_a = svc_->next_query(a).body;

  svc_ = std::make_unique<OracleService>(ServiceOptions{data_, logs_});
  EXPECT_EQ(svc_->resume_all(), 2u);
  EXPECT_EQ(svc_->stats(a).body, sa);
  EXPECT_EQ(svc_->stats(b).body, sb);
  EXPECT_EQ(svc_->next_query(a).body, next_a);
  answer(a, 3);
  EXPECT_EQ(svc_->stats(a).body["queries_used"], 9);
}

TEST_F(ServiceTest, LogTextIsTheRawLog) {
  const std::string id = create({{"dataset", "tiny"}});
  svc_->next_query(id);
  svc_->submit_label(id, {{"src", 1}, {"dst", 2}, {"label", 1}});
  const auto text = svc_->log_text(id);
  ASSERT_TRUE(text.has_value());
  std::ifstream in(logs_ / (id + ".jsonl"));
  EXPECT_EQ(*text, std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  EXPECT_EQ(read_lines(logs_ / (id + ".jsonl")).size(), 3u);  // header, label, deduced
}

// ---------------------------------------------------------------------------
// HTTP

TEST_F(ServiceTest, HttpRoundTrip) {
  HttpServer server(*svc_);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);

  auto created = cli.Post("/api/sessions", R"({"dataset": "tiny", "strategy": "lc"})", "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 200);
  const std::string id = json::parse(created->body)["id"];

  auto next = cli.Get("/api/sessions/" + id + "/next");
  ASSERT_TRUE(next);
  EXPECT_EQ(next->status, 200);
  EXPECT_EQ(json::parse(next->body)["src"], 1);

  auto stale = cli.Post("/api/sessions/" + id + "/labels", R"({"src": 2, "dst": 1, "label": -1})", "application/json");
  EXPECT_EQ(stale->status, 409);
  auto ok = cli.Post("/api/sessions/" + id + "/labels", R"({"src": 1, "dst": 2, "label": 1})", "application/json");
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body)["deduced"].size(), 1u);

  auto stats = cli.Get("/api/sessions/" + id + "/stats");
  EXPECT_EQ(json::parse(stats->body)["labeled_total"], 2);
  auto log = cli.Get("/api/sessions/" + id + "/log");
  EXPECT_EQ(log->status, 200);
  EXPECT_EQ(log->get_header_value("Content-Type"), "application/x-ndjson");

  EXPECT_EQ(cli.Get("/api/sessions/nope/stats")->status, 404);
  EXPECT_EQ(cli.Post("/api/sessions", "{oops", "application/json")->status, 400);
  server.stop();
}

}  // namespace
}  // namespace poal
