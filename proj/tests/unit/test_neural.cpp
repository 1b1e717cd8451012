#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "veridebate/checkpoint.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/model.hpp"
#include "veridebate/nn_ops.hpp"
#include "veridebate/optimizer.hpp"
#include "veridebate/serialization.hpp"
#include "veridebate/trainer.hpp"

using namespace veridebate;
using kernels::Exec;

namespace {

Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

nn::InteractionView identity_head(const Matrix& eye, std::size_t heads = 1) {
  return {eye.cview(), eye.cview(), eye.cview(), eye.cview(), eye.cview(), eye.cview(), heads};
}

}  // namespace

TEST_CASE("activations match their closed forms") {
  gen::Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(-5.0, 5.0);
    CHECK(nn::elu(x) == doctest::Approx(x > 0 ? x : std::exp(x) - 1.0).epsilon(1e-14));
    CHECK(nn::leaky_relu(x) == doctest::Approx(x > 0 ? x : 0.2 * x).epsilon(1e-14));
    CHECK(nn::elu_derivative(x) == doctest::Approx(x > 0 ? 1.0 : std::exp(x)).epsilon(1e-14));
  }
}

TEST_CASE("GAT on a single self-looped node is ELU(W h)") {
  const DebateGraph g = single_node_graph();
  Matrix w(2, 3);
  w(0, 0) = 1.0; w(0, 1) = -2.0; w(1, 2) = 0.5;
  const std::vector<double> a{0.3, -0.1, 0.7, 0.2};
  Matrix x(1, 3);
  x(0, 0) = 0.5; x(0, 1) = 1.0; x(0, 2) = 4.0;
  nn::GatTrace trace;
  const Matrix y = nn::gat_forward({w.cview(), a}, x.cview(), g, true, Exec::Serial, &trace);
  CHECK(trace.alpha[0][0] == 1.0);
  CHECK(y(0, 0) == doctest::Approx(std::expm1(0.5 - 2.0)));
  CHECK(y(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("GAT with identity weight and zero attention averages neighbors") {
  const Edge e{0, 1};
  const DebateGraph g = graph_from_edges(2, std::span<const Edge>(&e, 1));
  // N(0) = {0}, N(1) = {0, 1}
  const Matrix w = identity(2);
  const std::vector<double> a(4, 0.0);
  Matrix x(2, 2);
  x(0, 0) = 1.0; x(0, 1) = -3.0; x(1, 0) = 3.0; x(1, 1) = 1.0;
  nn::GatTrace trace;
  const Matrix y = nn::gat_forward({w.cview(), a}, x.cview(), g, true, Exec::Serial, &trace);
  CHECK(trace.alpha[1][0] == doctest::Approx(0.5));
  CHECK(trace.alpha[1][1] == doctest::Approx(0.5));
  CHECK(y(1, 0) == doctest::Approx(2.0));
  CHECK(y(1, 1) == doctest::Approx(std::expm1(-1.0)));
  CHECK(y(0, 1) == doctest::Approx(std::expm1(-3.0)));
}

TEST_CASE("GAT output is local to connected components") {
  gen::Rng rng(11);
  const std::vector<Edge> edges{{0, 1}, {1, 0}, {1, 2}, {2, 1}, {3, 4}, {4, 3}};
  const DebateGraph g = graph_from_edges(5, edges);
  const Matrix w = gen::random_matrix(rng, 3, 4);
  const auto a = gen::random_vector(rng, 6);
  Matrix x = gen::random_matrix(rng, 5, 4);
  const Matrix before = nn::gat_forward({w.cview(), a}, x.cview(), g, true);
  for (std::size_t c = 0; c < 4; ++c) x(3, c) += 10.0;
  const Matrix after = nn::gat_forward({w.cview(), a}, x.cview(), g, true);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(after(i, c) == before(i, c));
  }
  CHECK(after(4, 0) != before(4, 0));
}

TEST_CASE("GAT is permutation equivariant and pooling invariant") {
  gen::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = rng.range(3, 7);
    std::vector<Edge> edges;
    for (std::size_t k = 0; k < 2 * n; ++k) edges.push_back({rng.index(n), rng.index(n)});
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    std::vector<Edge> permuted;
    for (auto e : edges) permuted.push_back({perm[e.src], perm[e.dst]});

    const Matrix w = gen::random_matrix(rng, 3, 4);
    const auto a = gen::random_vector(rng, 6);
    const Matrix x = gen::random_matrix(rng, n, 4);
    Matrix px(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < 4; ++c) px(perm[i], c) = x(i, c);
    }
    const Matrix y = nn::gat_forward({w.cview(), a}, x.cview(), graph_from_edges(n, edges), true);
    const Matrix py = nn::gat_forward({w.cview(), a}, px.cview(), graph_from_edges(n, permuted), true);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(py(perm[i], c) == doctest::Approx(y(i, c)).epsilon(1e-12));
    }
    const auto g1 = nn::global_mean_pool(y.cview());
    const auto g2 = nn::global_mean_pool(py.cview());
    for (std::size_t c = 0; c < 3; ++c) CHECK(g1[c] == doctest::Approx(g2[c]).epsilon(1e-12));
  }
}

TEST_CASE("GAT rejects mismatched input width") {
  const Matrix w(2, 3);
  const std::vector<double> a(4, 0.0);
  const Matrix x(1, 4);
  CHECK_THROWS_AS(nn::gat_forward({w.cview(), a}, x.cview(), single_node_graph(), true), DimensionError);
}

TEST_CASE("global mean pool") {
  Matrix one(1, 2);
  one(0, 0) = 4.0; one(0, 1) = -1.0;
  CHECK(nn::global_mean_pool(one.cview()) == std::vector<double>{4.0, -1.0});
  Matrix two(2, 2);
  two(0, 0) = 1.0; two(0, 1) = 3.0; two(1, 0) = 3.0; two(1, 1) = 1.0;
  CHECK(nn::global_mean_pool(two.cview()) == std::vector<double>{2.0, 2.0});
  CHECK_THROWS_AS(nn::global_mean_pool(Matrix(0, 2).cview()), PreconditionError);
}

TEST_CASE("pooled interaction ignores the query") {
  gen::Rng rng(3);
  const std::size_t dp = 4;
  const Matrix wg = gen::random_matrix(rng, dp, 3), we = gen::random_matrix(rng, dp, 5);
  const Matrix wq = gen::random_matrix(rng, dp, dp), wk = gen::random_matrix(rng, dp, dp);
  const Matrix wv = gen::random_matrix(rng, dp, dp), wo = gen::random_matrix(rng, dp, dp);
  const nn::InteractionView head{wg.cview(), we.cview(), wq.cview(), wk.cview(), wv.cview(), wo.cview(), 2};
  const Matrix nodes = gen::random_matrix(rng, 3, 3);
  const auto pooled = nn::global_mean_pool(nodes.cview());
  const auto e1 = gen::random_vector(rng, 5);
  const auto e2 = gen::random_vector(rng, 5);
  nn::InteractionTrace t1;
  const auto h1 = nn::interact(e1, nodes.cview(), pooled, head, InteractionMode::Pooled, Exec::Serial, &t1);
  const auto h2 = nn::interact(e2, nodes.cview(), pooled, head, InteractionMode::Pooled);
  CHECK(h1 == h2);
  for (const auto& w : t1.weights) CHECK(w == std::vector<double>{1.0});

  // c = W_o W_v W_g g
  std::vector<double> gp(dp, 0.0), v(dp, 0.0), c(dp, 0.0);
  for (std::size_t r = 0; r < dp; ++r) for (std::size_t k = 0; k < 3; ++k) gp[r] += wg(r, k) * pooled[k];
  for (std::size_t r = 0; r < dp; ++r) for (std::size_t k = 0; k < dp; ++k) v[r] += wv(r, k) * gp[k];
  for (std::size_t r = 0; r < dp; ++r) for (std::size_t k = 0; k < dp; ++k) c[r] += wo(r, k) * v[k];
  for (std::size_t r = 0; r < dp; ++r) CHECK(h1[dp + r] == doctest::Approx(c[r]).epsilon(1e-12));
}

TEST_CASE("node interaction over identical nodes equals the pooled result") {
  gen::Rng rng(9);
  const std::size_t dp = 4;
  const Matrix wg = gen::random_matrix(rng, dp, 3), we = gen::random_matrix(rng, dp, 3);
  const Matrix wq = gen::random_matrix(rng, dp, dp), wk = gen::random_matrix(rng, dp, dp);
  const Matrix wv = gen::random_matrix(rng, dp, dp), wo = gen::random_matrix(rng, dp, dp);
  const nn::InteractionView head{wg.cview(), we.cview(), wq.cview(), wk.cview(), wv.cview(), wo.cview(), 2};
  const auto row = gen::random_vector(rng, 3);
  Matrix nodes(4, 3);
  for (std::size_t i = 0; i < 4; ++i) std::copy(row.begin(), row.end(), nodes.row(i).begin());
  const auto pooled = nn::global_mean_pool(nodes.cview());
  const auto e = gen::random_vector(rng, 3);
  const auto a = nn::interact(e, nodes.cview(), pooled, head, InteractionMode::Nodes);
  const auto b = nn::interact(e, nodes.cview(), pooled, head, InteractionMode::Pooled);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
}

TEST_CASE("node interaction matches hand-evaluated scaled dot-product attention") {
  const Matrix eye = identity(2);
  Matrix nodes(2, 2);
  nodes(0, 0) = 2.0; nodes(1, 1) = 3.0;
  const std::vector<double> pooled{1.0, 1.5};
  const std::vector<double> news{1.0, 0.0};
  nn::InteractionTrace t;
  const auto h = nn::interact(news, nodes.cview(), pooled, identity_head(eye), InteractionMode::Nodes, Exec::Serial, &t);
  // scores: q.k1 / sqrt(2) = 2/sqrt(2), q.k2 = 0 (orthogonal)
  const double s1 = 2.0 / std::sqrt(2.0);
  const double w1 = std::exp(s1) / (std::exp(s1) + 1.0);
  CHECK(t.weights[0][0] == doctest::Approx(w1).epsilon(1e-14));
  CHECK(t.weights[0][1] == doctest::Approx(1.0 - w1).epsilon(1e-14));
  CHECK(h[0] == 1.0);
  CHECK(h[1] == 1.5);
  CHECK(h[2] == doctest::Approx(2.0 * w1).epsilon(1e-14));
  CHECK(h[3] == doctest::Approx(3.0 * (1.0 - w1)).epsilon(1e-14));
}

TEST_CASE("classify and cross-entropy examples") {
  const Matrix zero(2, 3);
  const std::vector<double> bias0{0.0, 0.0};
  const std::vector<double> h{1.0, -2.0, 0.5};
  const auto uniform = nn::classify(h, {zero.cview(), bias0});
  CHECK(uniform[0] == 0.5);
  CHECK(uniform[1] == 0.5);

  const std::vector<double> bias{std::log(3.0), 0.0};
  const auto p = nn::classify(h, {zero.cview(), bias});
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-14));

  CHECK(nn::cross_entropy({1.0, 0.0}, 0) == 0.0);
  CHECK(nn::cross_entropy({0.5, 0.5}, 1) == doctest::Approx(std::log(2.0)));
  CHECK(nn::cross_entropy({0.75, 0.25}, 1) == doctest::Approx(std::log(4.0)));
  CHECK(nn::cross_entropy({1.0, 0.0}, 1) == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(nn::classify(h, {Matrix(2, 2).cview(), bias0}), DimensionError);
}

TEST_CASE("analytic gradients match central finite differences") {
  gen::Rng rng(2024);
  for (std::size_t layers : {1, 2}) {
    for (auto mode : {InteractionMode::Nodes, InteractionMode::Pooled}) {
      for (int trial = 0; trial < 3; ++trial) {
        const ModelConfig c = gen::tiny_config(layers, mode);
        const AnalysisModel model(c, rng.bits());
        const GraphSample s = gen::random_sample(rng, c, rng.range(3, 8));
        const auto check = oracle::check_gradient(model, s);
        for (const auto& b : check.blocks) {
          INFO(b.name);
          CHECK(b.relative_error < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("smallest model: text dim 4, role dim 2, one layer, one head, 3 nodes") {
  gen::Rng rng(1);
  ModelConfig c = gen::tiny_config(1);
  c.gat_hidden = 4;
  c.proj_dim = 4;
  const AnalysisModel model(c, 99);
  const auto s = gen::random_sample(rng, c, 3);
  CHECK(oracle::check_gradient(model, s).max_relative_error() < 1e-4);
}

TEST_CASE("saturated correct prediction gives a vanishing classifier gradient") {
  gen::Rng rng(4);
  const ModelConfig c = gen::tiny_config(1);
  AnalysisModel model(c, 8);
  GraphSample s = gen::random_sample(rng, c, 4);
  s.label = Label::Fake;
  auto bias = model.block("classifier.b_fc");
  bias(0, 0) = -40.0;
  bias(0, 1) = 40.0;
  std::vector<double> grad(model.parameters().size(), 0.0);
  const double loss = sample_loss_and_gradient(model, s, grad);
  CHECK(loss < 1e-8);
  const auto& w = model.layout().find("classifier.W_fc");
  const auto& b = model.layout().find("classifier.b_fc");
  double norm = 0.0;
  for (std::size_t k = w.offset; k < b.offset + b.size(); ++k) norm += grad[k] * grad[k];
  CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("batch gradient is a mean and independent of execution mode") {
  gen::Rng rng(6);
  const ModelConfig c = gen::tiny_config(2);
  const AnalysisModel model(c, 12);
  std::vector<GraphSample> samples;
  for (int k = 0; k < 5; ++k) samples.push_back(gen::random_sample(rng, c, rng.range(3, 8)));
  std::vector<const GraphSample*> batch, doubled;
  for (const auto& s : samples) {
    batch.push_back(&s);
    doubled.push_back(&s);
    doubled.push_back(&s);
  }
  const auto g1 = batch_gradient(model, batch, Exec::Serial);
  const auto g2 = batch_gradient(model, doubled, Exec::Serial);
  for (std::size_t k = 0; k < g1.grad.size(); ++k) CHECK(g2.grad[k] == doctest::Approx(g1.grad[k]).epsilon(1e-12));
  const auto gp = batch_gradient(model, batch, Exec::Parallel);
  CHECK(gp.grad == g1.grad);
  CHECK(gp.losses == g1.losses);
}

TEST_CASE("non-finite values raise a fault naming the block") {
  gen::Rng rng(2);
  const ModelConfig c = gen::tiny_config(1);
  AnalysisModel model(c, 1);
  GraphSample s = gen::random_sample(rng, c, 3);
  model.block("mha.W_v")(0, 0) = std::nan("");
  const GraphSample* batch[] = {&s};
  CHECK_THROWS_AS(batch_gradient(model, batch), NumericalFault);
  std::vector<double> values(model.parameters().begin(), model.parameters().end());
  try {
    require_finite(model.layout(), values, "parameter");
    FAIL("expected a fault");
  } catch (const NumericalFault& e) {
    CHECK(std::string(e.what()).find("mha.W_v") != std::string::npos);
  }
}

TEST_CASE("parameter layout covers the whole vector") {
  const ModelConfig c;
  const AnalysisModel model(c, 0);
  std::size_t total = 0;
  for (const auto& b : model.layout().blocks()) {
    CHECK(b.offset == total);
    total += b.size();
  }
  CHECK(total == model.parameters().size());
  CHECK(model.layout().find("interaction.W_g").cols == c.gat_hidden);
  CHECK(model.layout().find("gat0.weight").cols == 2 * c.text_dim);
  for (double b : model.block("classifier.b_fc").flat()) CHECK(b == 0.0);
  ModelConfig odd;
  odd.proj_dim = 10;
  odd.heads = 4;
  CHECK_THROWS_AS(odd.validate(), ConfigError);
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.0, 0.0};
    AdamState st(2, {0.1});
    adam_step(p, g, st);
    CHECK(p == std::vector<double>{1.0, -2.0});
    CHECK(st.step == 1);
  }
  SUBCASE("one step from fresh state") {
    std::vector<double> p{0.0, 0.0, 0.0};
    const std::vector<double> g{0.5, -2.0, 1e-3};
    const double lr = 0.01, eps = 1e-8;
    AdamState st(3, {lr, 0.9, 0.999, eps});
    adam_step(p, g, st);
    for (std::size_t k = 0; k < 3; ++k) {
      // m_hat = g, v_hat = g^2
      CHECK(p[k] == doctest::Approx(-lr * g[k] / (std::abs(g[k]) + eps)).epsilon(1e-12));
    }
  }
  SUBCASE("constant gradient drives steps towards -lr*sign(g)") {
    std::vector<double> p{0.0, 0.0};
    const std::vector<double> g{3.0, -0.2};
    AdamState st(2, {0.05});
    std::vector<double> prev = p;
    for (int k = 0; k < 500; ++k) {
      prev = p;
      adam_step(p, g, st);
    }
    CHECK(p[0] - prev[0] == doctest::Approx(-0.05).epsilon(1e-6));
    CHECK(p[1] - prev[1] == doctest::Approx(0.05).epsilon(1e-6));
  }
  SUBCASE("non-finite gradient and length mismatch") {
    std::vector<double> p{0.0};
    AdamState st(1, {});
    const std::vector<double> bad{std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(adam_step(p, bad, st), NumericalFault);
    const std::vector<double> two{0.0, 0.0};
    CHECK_THROWS_AS(adam_step(p, two, st), DimensionError);
  }
}

namespace {

std::vector<GraphSample> separable_set(gen::Rng& rng, const ModelConfig& c, std::size_t n) {
  std::vector<GraphSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    GraphSample s = gen::random_sample(rng, c, rng.range(3, 6));
    const double sign = s.label == Label::Fake ? 1.0 : -1.0;
    s.news_embedding[0] = sign;
    for (std::size_t i = 0; i < s.text_embeddings.rows(); ++i) s.text_embeddings(i, 0) = sign;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("training") {
  gen::Rng rng(77);
  const ModelConfig c = gen::tiny_config(1);
  const auto data = separable_set(rng, c, 40);

  SUBCASE("lr = 0 keeps parameters and loss constant") {
    AnalysisModel model(c, 3);
    const std::vector<double> before(model.parameters().begin(), model.parameters().end());
    TrainConfig tc;
    tc.epochs = 3;
    tc.learning_rate = 0.0;
    const auto r = train(model, data, {}, tc);
    CHECK(std::equal(before.begin(), before.end(), model.parameters().begin()));
    REQUIRE(r.loss_history.size() == 3);
    CHECK(r.loss_history[1] == r.loss_history[0]);
    CHECK(r.loss_history[2] == r.loss_history[0]);
  }
  SUBCASE("same seed gives bit-identical histories; serial equals parallel") {
    TrainConfig tc;
    tc.epochs = 4;
    tc.batch_size = 8;
    tc.learning_rate = 0.02;
    tc.seed = 5;
    AnalysisModel a(c, 3), b(c, 3), s(c, 3);
    const auto ra = train(a, data, {}, tc);
    const auto rb = train(b, data, {}, tc);
    tc.exec = Exec::Serial;
    const auto rs = train(s, data, {}, tc);
    CHECK(ra.loss_history == rb.loss_history);
    CHECK(ra.loss_history == rs.loss_history);
    CHECK(std::equal(a.parameters().begin(), a.parameters().end(), s.parameters().begin()));
  }
  SUBCASE("loss decreases and frozen blocks stay fixed") {
    AnalysisModel model(c, 3);
    const auto frozen = model.block("role.embeddings");
    const std::vector<double> before(frozen.flat().begin(), frozen.flat().end());
    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 8;
    tc.learning_rate = 0.03;
    tc.frozen_blocks = {"role.embeddings"};
    const auto r = train(model, data, {}, tc);
    CHECK(r.loss_history.back() < 0.5 * r.loss_history.front());
    const auto after = model.block("role.embeddings").flat();
    CHECK(std::equal(before.begin(), before.end(), after.begin()));
  }
  SUBCASE("validation keeps the best epoch") {
    AnalysisModel model(c, 3);
    TrainConfig tc;
    tc.epochs = 6;
    tc.learning_rate = 0.03;
    std::vector<double> snapshot;
    std::vector<std::vector<double>> per_epoch;
    tc.on_epoch = [&](const EpochReport&) { per_epoch.emplace_back(model.parameters().begin(), model.parameters().end()); };
    const auto val = separable_set(rng, c, 10);
    const auto r = train(model, data, val, tc);
    REQUIRE(r.val_macro_f1_history.size() == 6);
    const auto best = std::max_element(r.val_macro_f1_history.begin(), r.val_macro_f1_history.end());
    CHECK(r.best_epoch == static_cast<std::size_t>(best - r.val_macro_f1_history.begin()) + 1);
    CHECK(std::equal(model.parameters().begin(), model.parameters().end(), per_epoch[r.best_epoch - 1].begin()));
  }
  SUBCASE("errors") {
    AnalysisModel model(c, 3);
    CHECK_THROWS_AS(train(model, {}, {}, TrainConfig{}), PreconditionError);
    TrainConfig tc;
    tc.frozen_blocks = {"nope"};
    CHECK_THROWS_AS(train(model, data, {}, tc), PreconditionError);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "veridebate_ckpt_test";
  std::filesystem::create_directories(dir);
  ModelConfig c = gen::tiny_config(2, InteractionMode::Pooled);
  const AnalysisModel model(c, 42);
  save_checkpoint(dir / "m.bin", model, {{"note", "x"}});
  const auto loaded = load_checkpoint(dir / "m.bin");
  CHECK(loaded.model.config() == c);
  CHECK(loaded.model.seed() == 42);
  CHECK(std::equal(model.parameters().begin(), model.parameters().end(), loaded.model.parameters().begin()));
  CHECK(loaded.header.at("labels").at("fake") == 1);
  CHECK(loaded.header.at("metadata").at("note") == "x");

  write_text_atomic(dir / "bad.bin", "NOTACKPT00000000");
  CHECK_THROWS(load_checkpoint(dir / "bad.bin"));
  std::filesystem::remove_all(dir);
}
