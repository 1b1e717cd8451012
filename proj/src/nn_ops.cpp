#include "veridebate/nn_ops.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "veridebate/errors.hpp"

namespace veridebate::nn {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
double leaky_relu(double x) { return x > 0.0 ? x : kLeakySlope * x; }
double leaky_relu_derivative(double x) { return x > 0.0 ? 1.0 : kLeakySlope; }

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    total += out[k];
  }
  for (double& x : out) x /= total;
  return out;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

void require_shape(ConstMatrixView m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows != rows || m.cols != cols) {
    throw DimensionError(fmt::format("{} is {}x{}, expected {}x{}", what, m.rows, m.cols, rows, cols));
  }
}

void require_shape(MatrixView m, std::size_t rows, std::size_t cols, const char* what) {
  require_shape(ConstMatrixView(m), rows, cols, what);
}

}  // namespace

// ---------------------------------------------------------------- GAT

Matrix gat_forward(const GatLayerView& layer, ConstMatrixView features, const DebateGraph& graph, bool activate,
                   Exec exec, GatTrace* trace) {
  const std::size_t n = features.rows;
  const std::size_t out_dim = layer.weight.rows;
  if (n != graph.num_nodes) throw DimensionError("feature rows do not match the graph");
  if (features.cols != layer.weight.cols) {
    throw DimensionError(fmt::format("GAT input width {} does not match weight width {}", features.cols, layer.weight.cols));
  }
  if (layer.attention.size() != 2 * out_dim) throw DimensionError("GAT attention vector must have length 2*out");

  Matrix z(n, out_dim);
  kernels::project_rows(exec, features, layer.weight, z.view());
  const auto a_src = layer.attention.subspan(0, out_dim);
  const auto a_nbr = layer.attention.subspan(out_dim, out_dim);
  std::vector<double> src_score(n);
  std::vector<double> nbr_score(n);
  for (std::size_t i = 0; i < n; ++i) {
    src_score[i] = dot(a_src, z.row(i));
    nbr_score[i] = dot(a_nbr, z.row(i));
  }

  Matrix aggregated(n, out_dim);
  Matrix output(n, out_dim);
  std::vector<std::vector<double>> logit_inputs(n);
  std::vector<std::vector<double>> alpha(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel && n * out_dim >= 4096)
  for (long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& nbrs = graph.in_neighbors[i];
    std::vector<double> pre(nbrs.size());
    std::vector<double> scores(nbrs.size());
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      pre[k] = src_score[i] + nbr_score[nbrs[k]];
      scores[k] = leaky_relu(pre[k]);
    }
    std::vector<double> weights = softmax(scores);
    auto m = aggregated.row(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const auto zj = z.row(nbrs[k]);
      for (std::size_t c = 0; c < out_dim; ++c) m[c] += weights[k] * zj[c];
    }
    auto y = output.row(i);
    for (std::size_t c = 0; c < out_dim; ++c) y[c] = activate ? elu(m[c]) : m[c];
    logit_inputs[i] = std::move(pre);
    alpha[i] = std::move(weights);
  }

  if (trace) {
    trace->projected = std::move(z);
    trace->aggregated = std::move(aggregated);
    trace->output = output;
    trace->logit_inputs = std::move(logit_inputs);
    trace->alpha = std::move(alpha);
    trace->activate = activate;
  }
  return output;
}

void gat_backward(const GatLayerView& layer, ConstMatrixView features, const DebateGraph& graph, const GatTrace& trace,
                  ConstMatrixView d_output, const GatGradView& grads, MatrixView d_features, Exec exec) {
  const std::size_t n = features.rows;
  const std::size_t out_dim = layer.weight.rows;
  require_shape(d_output, n, out_dim, "GAT output gradient");
  require_shape(grads.weight, out_dim, features.cols, "GAT weight gradient");
  require_shape(d_features, n, features.cols, "GAT input gradient");
  if (grads.attention.size() != 2 * out_dim) throw DimensionError("GAT attention gradient must have length 2*out");

  const Matrix& z = trace.projected;
  Matrix d_agg(n, out_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < out_dim; ++c) {
      const double g = d_output(i, c);
      d_agg(i, c) = trace.activate ? g * elu_derivative(trace.aggregated(i, c)) : g;
    }
  }

  Matrix dz(n, out_dim);
  std::vector<double> d_src(n, 0.0);
  std::vector<double> d_nbr(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nbrs = graph.in_neighbors[i];
    const auto& alpha = trace.alpha[i];
    const auto dm = d_agg.row(i);
    std::vector<double> d_alpha(nbrs.size());
    double weighted = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const std::size_t j = nbrs[k];
      d_alpha[k] = dot(dm, z.row(j));
      weighted += alpha[k] * d_alpha[k];
      auto dzj = dz.row(j);
      for (std::size_t c = 0; c < out_dim; ++c) dzj[c] += alpha[k] * dm[c];
    }
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const double d_score = alpha[k] * (d_alpha[k] - weighted);
      const double d_pre = d_score * leaky_relu_derivative(trace.logit_inputs[i][k]);
      d_src[i] += d_pre;
      d_nbr[nbrs[k]] += d_pre;
    }
  }

  const auto a_src = layer.attention.subspan(0, out_dim);
  const auto a_nbr = layer.attention.subspan(out_dim, out_dim);
  auto g_src = grads.attention.subspan(0, out_dim);
  auto g_nbr = grads.attention.subspan(out_dim, out_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto zi = z.row(i);
    auto dzi = dz.row(i);
    for (std::size_t c = 0; c < out_dim; ++c) {
      g_src[c] += d_src[i] * zi[c];
      g_nbr[c] += d_nbr[i] * zi[c];
      dzi[c] += d_src[i] * a_src[c] + d_nbr[i] * a_nbr[c];
    }
  }
  kernels::project_rows_backward(exec, features, layer.weight, dz.view(), d_features, grads.weight);
}

// ---------------------------------------------------------------- pooling

std::vector<double> global_mean_pool(ConstMatrixView features) {
  if (features.rows == 0) throw PreconditionError("cannot pool an empty node set");
  std::vector<double> out(features.cols, 0.0);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto r = features.row(i);
    for (std::size_t c = 0; c < features.cols; ++c) out[c] += r[c];
  }
  const double inv = 1.0 / static_cast<double>(features.rows);
  for (double& x : out) x *= inv;
  return out;
}

void global_mean_pool_backward(std::span<const double> d_pooled, MatrixView d_features) {
  if (d_pooled.size() != d_features.cols) throw DimensionError("pooled gradient width mismatch");
  const double inv = 1.0 / static_cast<double>(d_features.rows);
  for (std::size_t i = 0; i < d_features.rows; ++i) {
    auto r = d_features.row(i);
    for (std::size_t c = 0; c < d_features.cols; ++c) r[c] += d_pooled[c] * inv;
  }
}

// ---------------------------------------------------------------- interactive attention

namespace {

void check_interaction(const InteractionView& head, std::size_t node_width, std::size_t news_width) {
  const std::size_t dp = head.w_q.rows;
  if (head.heads == 0 || dp % head.heads != 0) {
    throw DimensionError(fmt::format("{} heads do not divide projection width {}", head.heads, dp));
  }
  require_shape(head.w_g, dp, node_width, "W_g");
  require_shape(head.w_e, dp, news_width, "W_e");
  require_shape(head.w_q, dp, dp, "W_q");
  require_shape(head.w_k, dp, dp, "W_k");
  require_shape(head.w_v, dp, dp, "W_v");
  require_shape(head.w_o, dp, dp, "W_o");
}

}  // namespace

std::vector<double> interact(std::span<const double> news_embedding, ConstMatrixView node_features,
                             std::span<const double> pooled, const InteractionView& head, InteractionMode mode,
                             Exec exec, InteractionTrace* trace) {
  check_interaction(head, pooled.size(), news_embedding.size());
  const std::size_t dp = head.w_q.rows;
  const std::size_t dk = dp / head.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<double> g_proj(dp);
  kernels::gemv(exec, head.w_g, pooled, g_proj);
  std::vector<double> e_proj(dp);
  kernels::gemv(exec, head.w_e, news_embedding, e_proj);
  std::vector<double> query(dp);
  kernels::gemv(exec, head.w_q, e_proj, query);

  Matrix sources;
  if (mode == InteractionMode::Pooled) {
    sources = Matrix(1, dp);
    std::copy(g_proj.begin(), g_proj.end(), sources.row(0).begin());
  } else {
    if (node_features.cols != pooled.size()) throw DimensionError("node features and pooled vector differ in width");
    sources = Matrix(node_features.rows, dp);
    kernels::project_rows(exec, node_features, head.w_g, sources.view());
  }
  const std::size_t m = sources.rows();
  Matrix keys(m, dp);
  Matrix values(m, dp);
  kernels::project_rows(exec, sources.cview(), head.w_k, keys.view());
  kernels::project_rows(exec, sources.cview(), head.w_v, values.view());

  std::vector<std::vector<double>> weights(head.heads);
  std::vector<double> attended(dp, 0.0);
  for (std::size_t h = 0; h < head.heads; ++h) {
    const std::size_t lo = h * dk;
    std::vector<double> scores(m);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t c = lo; c < lo + dk; ++c) acc += query[c] * keys(i, c);
      scores[i] = acc * scale;
    }
    weights[h] = softmax(scores);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t c = lo; c < lo + dk; ++c) attended[c] += weights[h][i] * values(i, c);
    }
  }
  std::vector<double> context(dp);
  kernels::gemv(exec, head.w_o, attended, context);

  std::vector<double> fused(2 * dp);
  std::copy(g_proj.begin(), g_proj.end(), fused.begin());
  std::copy(context.begin(), context.end(), fused.begin() + static_cast<long>(dp));

  if (trace) {
    trace->pooled.assign(pooled.begin(), pooled.end());
    trace->g_proj = std::move(g_proj);
    trace->e_proj = std::move(e_proj);
    trace->query = std::move(query);
    trace->sources = std::move(sources);
    trace->keys = std::move(keys);
    trace->values = std::move(values);
    trace->weights = std::move(weights);
    trace->attended = std::move(attended);
    trace->context = std::move(context);
  }
  return fused;
}

void interact_backward(std::span<const double> news_embedding, ConstMatrixView node_features,
                       const InteractionView& head, InteractionMode mode, const InteractionTrace& trace,
                       std::span<const double> d_fused, const InteractionGradView& grads, MatrixView d_node_features,
                       std::span<double> d_pooled, Exec exec) {
  check_interaction(head, trace.pooled.size(), news_embedding.size());
  const std::size_t dp = head.w_q.rows;
  const std::size_t dk = dp / head.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  if (d_fused.size() != 2 * dp) throw DimensionError("fused gradient must have length 2*d_p");
  if (d_pooled.size() != trace.pooled.size()) throw DimensionError("pooled gradient width mismatch");

  std::vector<double> d_gproj(d_fused.begin(), d_fused.begin() + static_cast<long>(dp));
  const auto d_context = d_fused.subspan(dp, dp);

  kernels::ger_acc(exec, d_context, trace.attended, grads.w_o);
  std::vector<double> d_attended(dp, 0.0);
  kernels::gemv_t_acc(exec, head.w_o, d_context, d_attended);

  const std::size_t m = trace.sources.rows();
  Matrix d_keys(m, dp);
  Matrix d_values(m, dp);
  std::vector<double> d_query(dp, 0.0);
  for (std::size_t h = 0; h < head.heads; ++h) {
    const std::size_t lo = h * dk;
    const auto& w = trace.weights[h];
    std::vector<double> d_w(m);
    double weighted = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t c = lo; c < lo + dk; ++c) {
        acc += d_attended[c] * trace.values(i, c);
        d_values(i, c) += w[i] * d_attended[c];
      }
      d_w[i] = acc;
      weighted += w[i] * acc;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double d_score = w[i] * (d_w[i] - weighted) * scale;
      for (std::size_t c = lo; c < lo + dk; ++c) {
        d_query[c] += d_score * trace.keys(i, c);
        d_keys(i, c) += d_score * trace.query[c];
      }
    }
  }

  kernels::ger_acc(exec, d_query, trace.e_proj, grads.w_q);
  std::vector<double> d_eproj(dp, 0.0);
  kernels::gemv_t_acc(exec, head.w_q, d_query, d_eproj);
  kernels::ger_acc(exec, d_eproj, news_embedding, grads.w_e);

  Matrix d_sources(m, dp);
  kernels::project_rows_backward(exec, trace.sources.cview(), head.w_k, d_keys.cview(), d_sources.view(), grads.w_k);
  kernels::project_rows_backward(exec, trace.sources.cview(), head.w_v, d_values.cview(), d_sources.view(), grads.w_v);

  if (mode == InteractionMode::Pooled) {
    const auto row = d_sources.row(0);
    for (std::size_t c = 0; c < dp; ++c) d_gproj[c] += row[c];
  } else {
    require_shape(d_node_features, node_features.rows, node_features.cols, "node feature gradient");
    kernels::project_rows_backward(exec, node_features, head.w_g, d_sources.cview(), d_node_features, grads.w_g);
  }
  kernels::ger_acc(exec, d_gproj, trace.pooled, grads.w_g);
  kernels::gemv_t_acc(exec, head.w_g, d_gproj, d_pooled);
}

// ---------------------------------------------------------------- classifier

std::array<double, 2> classifier_logits(std::span<const double> fused, const ClassifierView& head) {
  require_shape(head.weight, 2, fused.size(), "classifier weight");
  if (head.bias.size() != 2) throw DimensionError("classifier bias must have length 2");
  std::array<double, 2> z{};
  for (std::size_t r = 0; r < 2; ++r) z[r] = dot(head.weight.row(r), fused) + head.bias[r];
  return z;
}

std::array<double, 2> classify(std::span<const double> fused, const ClassifierView& head) {
  const auto z = classifier_logits(fused, head);
  const auto p = softmax(z);
  return {p[0], p[1]};
}

double cross_entropy(const std::array<double, 2>& probs, int label) {
  if (label != 0 && label != 1) throw PreconditionError(fmt::format("label {} is not 0 or 1", label));
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbabilityFloor));
}

void classifier_backward(std::span<const double> fused, const ClassifierView& head, const std::array<double, 2>& probs,
                         int label, const ClassifierGradView& grads, std::span<double> d_fused) {
  if (label != 0 && label != 1) throw PreconditionError(fmt::format("label {} is not 0 or 1", label));
  require_shape(grads.weight, 2, fused.size(), "classifier weight gradient");
  if (d_fused.size() != fused.size()) throw DimensionError("fused gradient width mismatch");
  // Below the floor the loss is constant in the logits.
  if (probs[static_cast<std::size_t>(label)] < kProbabilityFloor) return;
  std::array<double, 2> dz{probs[0], probs[1]};
  dz[static_cast<std::size_t>(label)] -= 1.0;
  for (std::size_t r = 0; r < 2; ++r) {
    auto gw = grads.weight.row(r);
    for (std::size_t c = 0; c < fused.size(); ++c) gw[c] += dz[r] * fused[c];
    grads.bias[r] += dz[r];
  }
  for (std::size_t c = 0; c < fused.size(); ++c) d_fused[c] += dz[0] * head.weight(0, c) + dz[1] * head.weight(1, c);
}

}  // namespace veridebate::nn
