#include "veridebate/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "veridebate/errors.hpp"
#include "veridebate/hashing.hpp"
#include "veridebate/metrics.hpp"

namespace veridebate {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) throw ConfigError("learning rate must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must be in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit_interval(rng()) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  return idx;
}

std::vector<std::array<double, 2>> predict_all(const AnalysisModel& model, std::span<const GraphSample> samples,
                                               kernels::Exec exec) {
  std::vector<std::array<double, 2>> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  const long count = static_cast<long>(samples.size());
#pragma omp parallel for schedule(dynamic, 1) if (exec == kernels::Exec::Parallel && count > 1)
  for (long k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      out[i] = predict_proba(model, samples[i], kernels::Exec::Serial);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace {

double validation_macro_f1(const AnalysisModel& model, std::span<const GraphSample> val, kernels::Exec exec) {
  const auto probs = predict_all(model, val, exec);
  std::vector<Label> pred;
  std::vector<Label> truth;
  for (std::size_t i = 0; i < val.size(); ++i) {
    if (!val[i].label) throw PreconditionError(fmt::format("validation sample {} has no label", val[i].id));
    pred.push_back(decide(probs[i]));
    truth.push_back(*val[i].label);
  }
  return compute_metrics(pred, truth).macro_f1;
}

}  // namespace

TrainResult train(AnalysisModel& model, std::span<const GraphSample> train_set, std::span<const GraphSample> val_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw PreconditionError("no training items");

  const ParamLayout& layout = model.layout();
  std::vector<Range> active;
  for (const auto& name : config.frozen_blocks) layout.find(name);
  for (const auto& b : layout.blocks()) {
    if (std::find(config.frozen_blocks.begin(), config.frozen_blocks.end(), b.name) == config.frozen_blocks.end()) {
      active.push_back({b.offset, b.size()});
    }
  }

  AdamState state(layout.total(), {config.learning_rate, config.beta1, config.beta2, config.epsilon});
  TrainResult result;
  std::vector<double> best_params;
  double best_f1 = -1.0;
  std::vector<const GraphSample*> batch;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(train_set.size());
    if (config.shuffle) {
      order = shuffled_indices(train_set.size(), splitmix64(config.seed ^ splitmix64(epoch)));
    } else {
      std::iota(order.begin(), order.end(), std::size_t{0});
    }
    std::vector<double> losses(train_set.size(), 0.0);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(&train_set[order[k]]);
      const BatchGradient g = batch_gradient(model, batch, config.exec);
      for (std::size_t k = start; k < stop; ++k) losses[order[k]] = g.losses[k - start];
      adam_step(model.parameters(), g.grad, state, active, config.exec);
      require_finite(layout, model.parameters(), "parameter");
    }
    // Summed in dataset order so the value does not depend on the shuffle.
    double total = 0.0;
    for (double l : losses) total += l;
    EpochReport report{epoch, total / static_cast<double>(losses.size()), std::nullopt};
    result.loss_history.push_back(report.train_loss);

    if (!val_set.empty()) {
      const double f1 = validation_macro_f1(model, val_set, config.exec);
      report.val_macro_f1 = f1;
      result.val_macro_f1_history.push_back(f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_params.assign(model.parameters().begin(), model.parameters().end());
        result.best_epoch = epoch;
      }
    } else {
      result.best_epoch = epoch;
    }
    if (config.on_epoch) config.on_epoch(report);
  }
  if (!best_params.empty()) std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
  return result;
}

}  // namespace veridebate
