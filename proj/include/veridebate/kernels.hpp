#pragma once

#include <span>

#include "veridebate/tensor.hpp"

// Dense kernels used by the analysis model. Every kernel has a serial reference
// and an OpenMP variant; the OpenMP variants partition over output elements and
// keep the serial per-element summation order, so both produce identical bits.
namespace veridebate::kernels {

enum class Exec { Serial, Parallel };

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

namespace serial {
// y = A x
void gemv(ConstMatrixView a, std::span<const double> x, std::span<double> y);
// y += A^T g
void gemv_t_acc(ConstMatrixView a, std::span<const double> g, std::span<double> y);
// dA += g x^T
void ger_acc(std::span<const double> g, std::span<const double> x, MatrixView da);
// out = X W^T  (rows of X projected by W)
void project_rows(ConstMatrixView x, ConstMatrixView w, MatrixView out);
// dX += dOut W ; dW += dOut^T X
void project_rows_backward(ConstMatrixView x, ConstMatrixView w, ConstMatrixView d_out, MatrixView dx, MatrixView dw);
// One bias-corrected Adam update in place; `step` is the already-incremented count.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 long step, const AdamHyper& hp);
// out[i] = sum_k parts[k][i], summed in k order
void sum_ordered(std::span<const std::span<const double>> parts, std::span<double> out);
}  // namespace serial

namespace omp {
void gemv(ConstMatrixView a, std::span<const double> x, std::span<double> y);
void gemv_t_acc(ConstMatrixView a, std::span<const double> g, std::span<double> y);
void ger_acc(std::span<const double> g, std::span<const double> x, MatrixView da);
void project_rows(ConstMatrixView x, ConstMatrixView w, MatrixView out);
void project_rows_backward(ConstMatrixView x, ConstMatrixView w, ConstMatrixView d_out, MatrixView dx, MatrixView dw);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 long step, const AdamHyper& hp);
void sum_ordered(std::span<const std::span<const double>> parts, std::span<double> out);
}  // namespace omp

// Dispatchers.
void gemv(Exec e, ConstMatrixView a, std::span<const double> x, std::span<double> y);
void gemv_t_acc(Exec e, ConstMatrixView a, std::span<const double> g, std::span<double> y);
void ger_acc(Exec e, std::span<const double> g, std::span<const double> x, MatrixView da);
void project_rows(Exec e, ConstMatrixView x, ConstMatrixView w, MatrixView out);
void project_rows_backward(Exec e, ConstMatrixView x, ConstMatrixView w, ConstMatrixView d_out, MatrixView dx,
                           MatrixView dw);
void adam_update(Exec e, std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long step, const AdamHyper& hp);
void sum_ordered(Exec e, std::span<const std::span<const double>> parts, std::span<double> out);

int max_threads();

}  // namespace veridebate::kernels
