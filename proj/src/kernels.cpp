#include "veridebate/kernels.hpp"

#include <cmath>
#include <omp.h>

namespace veridebate::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 14;
}  // namespace

namespace serial {

void gemv(ConstMatrixView a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* row = a.data + i * a.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void gemv_t_acc(ConstMatrixView a, std::span<const double> g, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double gi = g[i];
    const double* row = a.data + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += row[j] * gi;
  }
}

void ger_acc(std::span<const double> g, std::span<const double> x, MatrixView da) {
  for (std::size_t i = 0; i < da.rows; ++i) {
    const double gi = g[i];
    double* row = da.data + i * da.cols;
    for (std::size_t j = 0; j < da.cols; ++j) row[j] += gi * x[j];
  }
}

void project_rows(ConstMatrixView x, ConstMatrixView w, MatrixView out) {
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* xr = x.data + r * x.cols;
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double* wo = w.data + o * w.cols;
      double acc = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k) acc += xr[k] * wo[k];
      out(r, o) = acc;
    }
  }
}

void project_rows_backward(ConstMatrixView x, ConstMatrixView w, ConstMatrixView d_out, MatrixView dx, MatrixView dw) {
  for (std::size_t r = 0; r < x.rows; ++r) {
    double* dxr = dx.data + r * dx.cols;
    const double* xr = x.data + r * x.cols;
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double g = d_out(r, o);
      const double* wo = w.data + o * w.cols;
      double* dwo = dw.data + o * dw.cols;
      for (std::size_t k = 0; k < x.cols; ++k) {
        dxr[k] += g * wo[k];
        dwo[k] += g * xr[k];
      }
    }
  }
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 long step, const AdamHyper& hp) {
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

void sum_ordered(std::span<const std::span<const double>> parts, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.0;
  for (const auto& part : parts) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
  }
}

}  // namespace serial

namespace omp {

void gemv(ConstMatrixView a, std::span<const double> x, std::span<double> y) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.size() >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* row = a.data + static_cast<std::size_t>(i) * a.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void gemv_t_acc(ConstMatrixView a, std::span<const double> g, std::span<double> y) {
  // Column blocks; within a block rows are visited in ascending order like the serial loop.
  constexpr std::size_t kBlock = 64;
  const auto blocks = static_cast<std::ptrdiff_t>((a.cols + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static) if (a.size() >= kParallelWork)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(a.cols, lo + kBlock);
    for (std::size_t i = 0; i < a.rows; ++i) {
      const double gi = g[i];
      const double* row = a.data + i * a.cols;
      for (std::size_t j = lo; j < hi; ++j) y[j] += row[j] * gi;
    }
  }
}

void ger_acc(std::span<const double> g, std::span<const double> x, MatrixView da) {
  const auto rows = static_cast<std::ptrdiff_t>(da.rows);
#pragma omp parallel for schedule(static) if (da.size() >= kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double gi = g[static_cast<std::size_t>(i)];
    double* row = da.data + static_cast<std::size_t>(i) * da.cols;
    for (std::size_t j = 0; j < da.cols; ++j) row[j] += gi * x[j];
  }
}

void project_rows(ConstMatrixView x, ConstMatrixView w, MatrixView out) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows * w.rows);
#pragma omp parallel for schedule(static) if (x.rows * w.size() >= kParallelWork)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    const std::size_t r = static_cast<std::size_t>(idx) / w.rows;
    const std::size_t o = static_cast<std::size_t>(idx) % w.rows;
    const double* xr = x.data + r * x.cols;
    const double* wo = w.data + o * w.cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < x.cols; ++k) acc += xr[k] * wo[k];
    out(r, o) = acc;
  }
}

void project_rows_backward(ConstMatrixView x, ConstMatrixView w, ConstMatrixView d_out, MatrixView dx, MatrixView dw) {
  const bool big = x.rows * w.size() >= kParallelWork;
  const auto rows = static_cast<std::ptrdiff_t>(x.rows);
  const auto outs = static_cast<std::ptrdiff_t>(w.rows);
#pragma omp parallel if (big)
  {
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      double* dxr = dx.data + static_cast<std::size_t>(r) * dx.cols;
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double g = d_out(static_cast<std::size_t>(r), o);
        const double* wo = w.data + o * w.cols;
        for (std::size_t k = 0; k < x.cols; ++k) dxr[k] += g * wo[k];
      }
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t o = 0; o < outs; ++o) {
      double* dwo = dw.data + static_cast<std::size_t>(o) * dw.cols;
      for (std::size_t r = 0; r < x.rows; ++r) {
        const double g = d_out(r, static_cast<std::size_t>(o));
        const double* xr = x.data + r * x.cols;
        for (std::size_t k = 0; k < x.cols; ++k) dwo[k] += g * xr[k];
      }
    }
  }
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 long step, const AdamHyper& hp) {
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
  const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (params.size() >= kParallelWork)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    const double g = grads[i];
    m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
    v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    params[i] -= hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

void sum_ordered(std::span<const std::span<const double>> parts, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (out.size() * parts.size() >= kParallelWork)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const auto i = static_cast<std::size_t>(s);
    double acc = 0.0;
    for (const auto& part : parts) acc += part[i];
    out[i] = acc;
  }
}

}  // namespace omp

#define VERIDEBATE_DISPATCH(fn, ...) \
  (e == Exec::Parallel ? omp::fn(__VA_ARGS__) : serial::fn(__VA_ARGS__))

void gemv(Exec e, ConstMatrixView a, std::span<const double> x, std::span<double> y) {
  VERIDEBATE_DISPATCH(gemv, a, x, y);
}
void gemv_t_acc(Exec e, ConstMatrixView a, std::span<const double> g, std::span<double> y) {
  VERIDEBATE_DISPATCH(gemv_t_acc, a, g, y);
}
void ger_acc(Exec e, std::span<const double> g, std::span<const double> x, MatrixView da) {
  VERIDEBATE_DISPATCH(ger_acc, g, x, da);
}
void project_rows(Exec e, ConstMatrixView x, ConstMatrixView w, MatrixView out) {
  VERIDEBATE_DISPATCH(project_rows, x, w, out);
}
void project_rows_backward(Exec e, ConstMatrixView x, ConstMatrixView w, ConstMatrixView d_out, MatrixView dx,
                           MatrixView dw) {
  VERIDEBATE_DISPATCH(project_rows_backward, x, w, d_out, dx, dw);
}
void adam_update(Exec e, std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long step, const AdamHyper& hp) {
  VERIDEBATE_DISPATCH(adam_update, params, grads, m, v, step, hp);
}
void sum_ordered(Exec e, std::span<const std::span<const double>> parts, std::span<double> out) {
  VERIDEBATE_DISPATCH(sum_ordered, parts, out);
}

#undef VERIDEBATE_DISPATCH

int max_threads() { return omp_get_max_threads(); }

}  // namespace veridebate::kernels
