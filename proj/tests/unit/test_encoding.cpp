#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "generators.hpp"
#include "veridebate/encoding.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/llm_gateway.hpp"
#include "veridebate/serialization.hpp"

using namespace veridebate;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kCorpus{
    "The council approved the bridge.", "The council rejected the bridge.", "Bridge approved by council.",
    "A miracle cure was found in a kitchen.", "Scientists publish peer reviewed results.",
    "Officials confirmed the figures on Monday.", "Sources say the photo was doctored.",
    "The photo is authentic.", "Breaking: celebrity spotted on the moon!", "Stock markets closed higher today.",
    "Stock markets closed lower today.", "The vaccine trial enrolled 3000 people.", "the VACCINE trial enrolled 3000 people",
    "市议会批准了这座桥。", "市议会否决了这座桥。", "疫苗试验招募了三千人。", "a", "b", "1", "a b", "b c",
    "verified documented corroborated", "fabricated doctored hoax", "notably", "repeat repeat", "repeat",
};

DebateTurn turn_with(DebateRole role, Stance stance, DebateStage stage) {
  return {0, "pro-0", stance, role, stage, "text", {}};
}

class CountingProvider : public EmbeddingProvider {
 public:
  std::string id() const override { return "counting"; }
  std::size_t dim() const override { return 3; }
  EmbeddingVector embed(std::string_view text) override {
    ++calls;
    return {{0.1 + static_cast<double>(text.size()), 1.0 / 3.0, -2.0}, id()};
  }
  int calls = 0;
};

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("Hello, World! 42x") == std::vector<std::string>{"hello", "world", "42x"});
  CHECK(tokenize("  ") .empty());
  CHECK(tokenize("桥a") == std::vector<std::string>{"桥", "a"});
}

TEST_CASE("hash embeddings are deterministic, normalized and collision-free on a fixed corpus") {
  HashEmbeddingProvider p(64, 3);
  std::set<std::vector<double>> seen;
  for (const auto& text : kCorpus) {
    const auto a = p.embed(text);
    const auto b = p.embed(text);
    CHECK(a.values == b.values);
    REQUIRE(a.values.size() == 64);
    double norm = 0.0;
    for (double x : a.values) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    seen.insert(a.values);
  }
  // Expected collisions: two lines differ only in case and punctuation, and
  // "repeat repeat" is a scalar multiple of "repeat" before normalization.
  CHECK(seen.size() == kCorpus.size() - 2);
  CHECK(p.embed("repeat repeat").values == p.embed("repeat").values);
  CHECK(p.embed("The vaccine trial enrolled 3000 people.").values == p.embed("the VACCINE trial enrolled 3000 people").values);
  CHECK(HashEmbeddingProvider(64, 4).embed("a").values != p.embed("a").values);
  CHECK_THROWS_AS(p.embed(""), PreconditionError);
  CHECK_THROWS_AS(p.embed(" \n"), PreconditionError);
  CHECK(p.id() != HashEmbeddingProvider(32, 3).id());
}

TEST_CASE("node vector hand example") {
  const std::vector<double> embeddings(kRoleKeys, 3.0);  // d_r = 1, every key maps to e = [3]
  const std::vector<double> projection{1.0, 2.0};       // W_role = [[1],[2]]
  const RoleTableView table{embeddings, projection, 2, 1};
  const auto node = build_node(turn_with(DebateRole::Rebutter, Stance::Fake, DebateStage::Rebuttal),
                               {{5.0, 7.0}, "test"}, table);
  CHECK(node == std::vector<double>{5.0, 7.0, 3.0, 6.0});
}

TEST_CASE("zero projection leaves only the text half") {
  auto table = RoleTable::random(4, 3, 11);
  std::fill(table.projection.begin(), table.projection.end(), 0.0);
  const EmbeddingVector emb{{0.5, -1.0, 2.0, 0.25}, "t"};
  const auto node = build_node(turn_with(DebateRole::OpeningSpeaker, Stance::True, DebateStage::Opening), emb, table.view());
  CHECK(std::vector<double>(node.begin(), node.begin() + 4) == emb.values);
  for (std::size_t i = 4; i < 8; ++i) CHECK(node[i] == 0.0);
}

TEST_CASE("node construction preconditions") {
  const auto table = RoleTable::random(4, 2, 1);
  const auto t = turn_with(DebateRole::Questioner, Stance::True, DebateStage::CrossExamination);
  CHECK_THROWS_AS(build_node(t, {{1.0, 2.0, 3.0}, "t"}, table.view()), DimensionError);
  CHECK_THROWS_AS(build_node(turn_with(DebateRole::Questioner, Stance::True, DebateStage::Closing), {{1, 2, 3, 4}, "t"},
                             table.view()),
                  PreconditionError);
  std::set<std::size_t> keys;
  for (auto r : kAllRoles) {
    for (auto s : kAllStances) keys.insert(role_key(r, s));
  }
  CHECK(keys.size() == kRoleKeys);
  CHECK(*keys.rbegin() == kRoleKeys - 1);
}

TEST_CASE("role table initial ranges") {
  const auto t = RoleTable::random(16, 8, 5);
  for (double x : t.embeddings) CHECK(std::abs(x) <= 0.1);
  for (double x : t.projection) CHECK(std::abs(x) <= 1.0 / std::sqrt(8.0));
  CHECK(RoleTable::random(16, 8, 5).embeddings == t.embeddings);
  CHECK(RoleTable::random(16, 8, 6).embeddings != t.embeddings);
}

TEST_CASE("role half is linear in the role embedding and independent of the text") {
  gen::Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d_h = rng.range(1, 6), d_r = rng.range(1, 4);
    auto table = RoleTable::random(d_h, d_r, rng.bits());
    const auto emb = EmbeddingVector{gen::random_vector(rng, d_h), "t"};
    const auto stage = kAllStages[rng.index(4)];
    const auto t = turn_with(gen::legal_role(rng, stage), rng.coin() ? Stance::True : Stance::Fake, stage);
    const auto base = build_node(t, emb, table.view());
    const double alpha = rng.uniform(-3.0, 3.0);
    for (double& x : table.embeddings) x *= alpha;
    const auto scaled = build_node(t, emb, table.view());
    for (std::size_t i = 0; i < d_h; ++i) CHECK(scaled[i] == base[i]);
    for (std::size_t i = d_h; i < 2 * d_h; ++i) CHECK(scaled[i] == doctest::Approx(alpha * base[i]).epsilon(1e-12));

    // same text, different role: only the tail moves
    const auto other_stage = kAllStages[rng.index(4)];
    const auto other = turn_with(gen::legal_role(rng, other_stage), opposing(t.stance), other_stage);
    const auto swapped = build_node(other, emb, table.view());
    for (std::size_t i = 0; i < d_h; ++i) CHECK(swapped[i] == base[i] * 1.0);
  }
}

TEST_CASE("cached embeddings are stored as float32 with a sidecar") {
  const auto dir = fs::temp_directory_path() / "veridebate-emb-cache";
  fs::remove_all(dir);
  auto inner = std::make_shared<CountingProvider>();
  std::vector<double> first;
  {
    CachedEmbeddingProvider cached(inner, dir);
    first = cached.embed("hello").values;
    CHECK(cached.embed("hello").values == first);
    CHECK(cached.misses() == 1);
    CHECK(inner->calls == 1);
  }
  CHECK(first[1] == static_cast<double>(static_cast<float>(1.0 / 3.0)));
  std::size_t f32 = 0, sidecars = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".f32") {
      ++f32;
      CHECK(fs::file_size(e.path()) == 12);
      CHECK(read_f32_vector(e.path()) == first);
    }
    if (e.path().extension() == ".json") {
      ++sidecars;
      const auto meta = nlohmann::json::parse(read_text(e.path()));
      CHECK(meta.at("dim") == 3);
      CHECK(meta.at("provider_id") == "counting");
    }
  }
  CHECK(f32 == 1);
  CHECK(sidecars == 1);
  CachedEmbeddingProvider reopened(inner, dir);
  CHECK(reopened.embed("hello").values == first);
  CHECK(reopened.misses() == 0);
  CHECK(inner->calls == 1);
  fs::remove_all(dir);
}

TEST_CASE("float32 files are little-endian") {
  const auto path = fs::temp_directory_path() / "veridebate-f32.bin";
  write_f32_vector(path, std::vector<double>{1.0, -2.5});
  const std::string bytes = read_text(path);
  REQUIRE(bytes.size() == 8);
  // 1.0f = 0x3f800000
  CHECK(static_cast<unsigned char>(bytes[0]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[3]) == 0x3f);
  CHECK(static_cast<unsigned char>(bytes[2]) == 0x80);
  CHECK(read_f32_vector(path) == std::vector<double>{1.0, -2.5});
  fs::remove(path);
}

TEST_CASE("remote embeddings against a local server") {
  httplib::Server server;
  std::string seen_body;
  int dim_reply = 4;
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    std::vector<double> v(static_cast<std::size_t>(dim_reply), 0.25);
    res.set_content(nlohmann::json{{"data", {{{"embedding", v}}}}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEmbeddingOptions o;
  o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
  o.dim = 4;
  o.api_key = "k";
  RemoteEmbeddingProvider p(o);
  CHECK(p.embed("some text").values == std::vector<double>(4, 0.25));
  const auto body = nlohmann::json::parse(seen_body);
  CHECK(body.at("input") == "some text");
  CHECK(body.at("dimensions") == 4);
  dim_reply = 3;
  CHECK_THROWS_AS(p.embed("other"), GatewayError);
  CHECK_THROWS_AS(p.embed(""), PreconditionError);

  server.stop();
  th.join();
}
