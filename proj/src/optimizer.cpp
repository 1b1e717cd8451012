#include "veridebate/optimizer.hpp"

#include <cmath>

#include <fmt/format.h>

#include "veridebate/errors.hpp"

namespace veridebate {

namespace {

void check(std::span<const double> params, std::span<const double> grads, const AdamState& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError(fmt::format("adam: {} params, {} grads, {}/{} moments", params.size(), grads.size(),
                                     state.m.size(), state.v.size()));
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!std::isfinite(grads[k])) throw NumericalFault(fmt::format("adam: non-finite gradient at index {}", k));
  }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, kernels::Exec exec) {
  const Range all{0, params.size()};
  adam_step(params, grads, state, std::span<const Range>(&all, 1), exec);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::span<const Range> active, kernels::Exec exec) {
  check(params, grads, state);
  for (const Range& r : active) {
    if (r.offset + r.length > params.size()) throw DimensionError("adam: active range out of bounds");
  }
  ++state.step;
  for (const Range& r : active) {
    kernels::adam_update(exec, params.subspan(r.offset, r.length), grads.subspan(r.offset, r.length),
                         std::span<double>(state.m).subspan(r.offset, r.length),
                         std::span<double>(state.v).subspan(r.offset, r.length), state.step, state.hyper);
  }
}

}  // namespace veridebate
