#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veridebate/model.hpp"
#include "veridebate/optimizer.hpp"

namespace veridebate {

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_macro_f1;
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;  // shuffling
  bool shuffle = true;
  std::vector<std::string> frozen_blocks;  // parameter block names kept fixed
  kernels::Exec exec = kernels::Exec::Parallel;
  std::function<void(const EpochReport&)> on_epoch;

  void validate() const;
};

struct TrainResult {
  std::vector<double> loss_history;           // mean per-sample training loss, one entry per epoch
  std::vector<double> val_macro_f1_history;   // empty without a validation set
  std::size_t best_epoch = 0;                 // 1-based epoch whose parameters the model holds
};

/// Mini-batch Adam on the mean cross-entropy. With a validation set the model
/// ends on the parameters of the epoch with the highest validation macF1
/// (earliest on ties); otherwise on the last epoch.
TrainResult train(AnalysisModel& model, std::span<const GraphSample> train_set, std::span<const GraphSample> val_set,
                  const TrainConfig& config);

/// Forward passes in parallel over samples; order of the result follows `samples`.
std::vector<std::array<double, 2>> predict_all(const AnalysisModel& model, std::span<const GraphSample> samples,
                                               kernels::Exec exec = kernels::Exec::Parallel);

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace veridebate
