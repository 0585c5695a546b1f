#include <gtest/gtest.h>

#include <cmath>

#include "cgpnas/evaluator.hpp"
#include "cgpnas/external_evaluator.hpp"

using namespace cgpnas;

namespace {

const std::string kStubs = CGPNAS_STUBS;

Genotype random_genotype(const BlockTemplate& t, Rng& rng) {
  Genotype g;
  for (const auto& s : t.schemas()) g.blocks.push_back(random_genome(s, rng));
  return g;
}

std::vector<EvaluationRequest> requests(std::size_t n, std::uint64_t first_id = 0) {
  const auto t = template_default(Variant::v2);
  Rng rng(n);
  std::vector<EvaluationRequest> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({first_id + i, decode_architecture(t, random_genotype(t, rng)), 36, "cifar10", "v2"});
  return out;
}

ExternalEvaluator stub(const std::string& script, std::vector<std::string> args, int timeout_ms = 0,
                       unsigned in_flight = 1) {
  ExternalEvaluator::Options o;
  o.command = {"python3", kStubs + "/" + script};
  o.command.insert(o.command.end(), args.begin(), args.end());
  o.timeout_ms = timeout_ms;
  o.max_in_flight = in_flight;
  return ExternalEvaluator(std::move(o));
}

}  // namespace

TEST(Surrogate, ZeroFeatures) {
  EXPECT_DOUBLE_EQ(surrogate_error({0, 0, 0}), 0.95);
  EXPECT_DOUBLE_EQ(surrogate_error({0, 4, 0}), 0.9);
}

TEST(Surrogate, Deterministic) {
  const auto reqs = requests(8);
  SurrogateEvaluator ev;
  const auto a = ev.evaluate(reqs), b = ev.evaluate(reqs);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].error, b[i].error);
    EXPECT_EQ(a[i].id, reqs[i].id);
  }
}

TEST(Surrogate, ParallelMatchesSerial) {
  const auto reqs = requests(37);
  SurrogateEvaluator serial(1), parallel(4);
  const auto a = serial.evaluate(reqs), b = parallel.evaluate(reqs);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].error, b[i].error);
}

TEST(Surrogate, MoreChannelsLowersFirstTerm) {
  ArchitectureGraph g;
  g.nodes = {{0, NodeOp::input, BlockType::identity, 3, 0, -1, {}},
             {1, NodeOp::block, BlockType::conv, 32, 3, 0, {0}},
             {2, NodeOp::global_avg_pool, BlockType::identity, 0, 0, 0, {1}},
             {3, NodeOp::classifier, BlockType::identity, 10, 0, 0, {2}}};
  ArchitectureGraph h = g;
  h.nodes[1].channels = 64;
  const auto fg = surrogate_features(g, complexity(g)), fh = surrogate_features(h, complexity(h));
  ASSERT_GT(fh.madds, fg.madds);
  EXPECT_EQ(fg.branch_count, fh.branch_count);
  EXPECT_EQ(fg.distinct_block_types, fh.distinct_block_types);
  EXPECT_LT(surrogate_error(fh), surrogate_error(fg));
}

TEST(Surrogate, ConflictsWithMadds) {
  const auto t = template_default(Variant::v2);
  Rng rng(77);
  std::vector<double> e, m;
  for (int i = 0; i < 1000; ++i) {
    const auto graph = decode_architecture(t, random_genotype(t, rng));
    const auto c = complexity(graph);
    e.push_back(surrogate_evaluate(graph, c).error);
    m.push_back(static_cast<double>(c.madds));
  }
  const double n = static_cast<double>(e.size());
  double me = 0, mm = 0;
  for (std::size_t i = 0; i < e.size(); ++i) me += e[i] / n, mm += m[i] / n;
  double cov = 0, ve = 0, vm = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    cov += (e[i] - me) * (m[i] - mm);
    ve += (e[i] - me) * (e[i] - me);
    vm += (m[i] - mm) * (m[i] - mm);
  }
  EXPECT_LT(cov / std::sqrt(ve * vm), 0.0);
}

TEST(Protocol, RequestFields) {
  const auto reqs = requests(1, 42);
  const auto doc = nlohmann::ordered_json::parse(request_line(reqs[0]));
  std::vector<std::string> keys;
  for (auto& [k, v] : doc.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"v", "id", "arch", "epochs", "dataset"}));
  EXPECT_EQ(doc["id"], 42);
  EXPECT_EQ(graph_from_json(doc["arch"]), reqs[0].arch);
}

TEST(Protocol, ResponseParsing) {
  EvaluationResult r;
  EXPECT_TRUE(parse_response(R"({"v":1,"id":3,"status":"ok","error":0.2})", r));
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.id, 3u);
  EXPECT_TRUE(parse_response(R"({"v":1,"id":3,"status":"failed"})", r));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(parse_response(R"({"v":1,"id":3,"status":"ok","error":1.5})", r));
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(parse_response(R"({"v":2,"id":3,"status":"ok","error":0.2})", r));
  EXPECT_FALSE(parse_response("garbage", r));
  EXPECT_FALSE(parse_response(R"({"v":1,"status":"ok"})", r));
}

TEST(External, EchoStub) {
  auto ev = stub("echo_evaluator.py", {});
  ev.start();
  const auto reqs = requests(6);
  const auto res = ev.evaluate(reqs);
  for (std::size_t i = 0; i < res.size(); ++i) {
    EXPECT_TRUE(res[i].ok());
    EXPECT_EQ(res[i].error, 0.5);
    EXPECT_EQ(res[i].id, reqs[i].id);
  }
  EXPECT_EQ(ev.requests_sent(), 6u);
}

TEST(External, DroppedRequestTimesOut) {
  auto ev = stub("drop_evaluator.py", {"102"}, 300, 2);
  ev.start();
  const auto res = ev.evaluate(requests(5, 100));
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (i == 2) {
      EXPECT_FALSE(res[i].ok());
      EXPECT_EQ(res[i].diagnostics, "timeout");
    } else {
      EXPECT_TRUE(res[i].ok());
      EXPECT_EQ(res[i].error, 0.25);
    }
  }
}

TEST(External, OutOfOrderResponsesMatchById) {
  auto ev = stub("shuffle_evaluator.py", {"4"}, 0, 4);
  ev.start();
  const auto reqs = requests(12, 7);
  const auto res = ev.evaluate(reqs);
  for (std::size_t i = 0; i < res.size(); ++i) {
    ASSERT_TRUE(res[i].ok());
    EXPECT_EQ(res[i].error, static_cast<double>(reqs[i].id % 100) / 100.0);
  }
}

TEST(External, CrashFailsInFlightAndRespawns) {
  auto ev = stub("crash_evaluator.py", {"3"});
  ev.start();
  const auto res = ev.evaluate(requests(6));
  for (std::size_t i = 0; i < res.size(); ++i) EXPECT_EQ(res[i].ok(), i < 3) << i;
  EXPECT_FALSE(ev.alive());
  const auto again = ev.evaluate(requests(2));
  EXPECT_TRUE(again[0].ok());
  EXPECT_TRUE(again[1].ok());
}

TEST(External, SpawnFailure) {
  ExternalEvaluator::Options o;
  o.command = {"/nonexistent/evaluator-binary"};
  ExternalEvaluator ev(o);
  EXPECT_THROW(ev.start(), EvaluatorError);
  EXPECT_THROW(ExternalEvaluator(ExternalEvaluator::Options{}), ConfigError);
}
