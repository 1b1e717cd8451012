#pragma once

#include <span>
#include <vector>

#include "veridebate/kernels.hpp"

namespace veridebate {

using kernels::AdamHyper;

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  AdamHyper hyper;

  AdamState() = default;
  AdamState(std::size_t size, AdamHyper hp) : m(size, 0.0), v(size, 0.0), hyper(hp) {}
};

/// Bias-corrected Adam step over the whole vector.
/// Throws NumericalFault on non-finite gradients, DimensionError on length mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               kernels::Exec exec = kernels::Exec::Serial);

/// Same update, restricted to the [offset, offset+len) ranges in `active`; the
/// step counter still advances once. Moments outside the ranges stay untouched.
struct Range {
  std::size_t offset = 0;
  std::size_t length = 0;
};
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::span<const Range> active, kernels::Exec exec = kernels::Exec::Serial);

}  // namespace veridebate
