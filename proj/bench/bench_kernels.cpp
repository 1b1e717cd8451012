// Serial reference vs OpenMP kernels, plus a whole batch gradient.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "veridebate/debate_graph.hpp"
#include "veridebate/kernels.hpp"
#include "veridebate/model.hpp"

using namespace veridebate;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = u(rng);
  return m;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

void BM_Gemv(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const auto x = random_vector(n, 2);
  std::vector<double> y(n);
  for (auto _ : state) {
    kernels::gemv(exec_of(state), a.cview(), x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n));
}

void BM_ProjectRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(64, n, 3);
  const Matrix w = random_matrix(n, n, 4);
  Matrix out(64, n);
  for (auto _ : state) {
    kernels::project_rows(exec_of(state), x.cview(), w.cview(), out.view());
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(64 * n * n));
}

void BM_Adam(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)) * 1024;
  auto params = random_vector(n, 5);
  const auto grads = random_vector(n, 6);
  std::vector<double> m(n, 0.0), v(n, 0.0);
  long step = 0;
  for (auto _ : state) {
    kernels::adam_update(exec_of(state), params, grads, m, v, ++step, {});
    benchmark::DoNotOptimize(params.data());
  }
}

void BM_BatchGradient(benchmark::State& state) {
  ModelConfig c;
  c.text_dim = 128;
  c.role_dim = 8;
  c.gat_hidden = 32;
  c.proj_dim = 32;
  c.heads = 2;
  const AnalysisModel model(c, 1);

  DebateLog log;
  log.news_id = "bench";
  const DebateStage stages[] = {DebateStage::Opening, DebateStage::CrossExamination, DebateStage::Rebuttal,
                                DebateStage::Closing};
  const DebateRole roles[] = {DebateRole::OpeningSpeaker, DebateRole::Questioner, DebateRole::Rebutter,
                              DebateRole::ClosingSpeaker};
  for (std::size_t i = 0; i < 8; ++i) {
    DebateTurn t;
    t.turn_index = i;
    t.stance = i % 2 == 0 ? Stance::True : Stance::Fake;
    t.stage = stages[i / 2];
    t.role = roles[i / 2];
    t.text = "x";
    if (i >= 2 && i < 6) t.targets = {i - 2};
    log.turns.push_back(t);
  }
  std::vector<GraphSample> samples(static_cast<std::size_t>(state.range(0)));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    samples[k].graph = build_topology(log);
    samples[k].text_embeddings = random_matrix(8, c.text_dim, 10 + k);
    samples[k].news_embedding = random_vector(c.text_dim, 100 + k);
    samples[k].label = k % 2 == 0 ? Label::Real : Label::Fake;
  }
  std::vector<const GraphSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  for (auto _ : state) {
    auto g = batch_gradient(model, batch, exec_of(state));
    benchmark::DoNotOptimize(g.grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Gemv)->ArgsProduct({{128, 512}, {0, 1}})->ArgNames({"n", "omp"});
BENCHMARK(BM_ProjectRows)->ArgsProduct({{32, 128}, {0, 1}})->ArgNames({"n", "omp"});
BENCHMARK(BM_Adam)->ArgsProduct({{64, 1024}, {0, 1}})->ArgNames({"kparams", "omp"});
BENCHMARK(BM_BatchGradient)->ArgsProduct({{16}, {0, 1}})->ArgNames({"batch", "omp"});

BENCHMARK_MAIN();
