#include "veridebate/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "veridebate/errors.hpp"
#include "veridebate/hashing.hpp"

namespace veridebate {

std::string to_string(InteractionMode mode) { return mode == InteractionMode::Nodes ? "nodes" : "pooled"; }

InteractionMode parse_interaction_mode(std::string_view text) {
  if (text == "nodes") return InteractionMode::Nodes;
  if (text == "pooled") return InteractionMode::Pooled;
  throw ConfigError(fmt::format("unknown interaction mode '{}' (expected nodes or pooled)", text));
}

void ModelConfig::validate() const {
  if (text_dim == 0 || role_dim == 0 || gat_hidden == 0 || proj_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (gat_layers == 0) throw ConfigError("the model needs at least one GAT layer");
  if (heads == 0 || proj_dim % heads != 0) {
    throw ConfigError(fmt::format("{} heads do not divide projection width {}", heads, proj_dim));
  }
}

std::string gat_weight_block(std::size_t layer) { return fmt::format("gat{}.weight", layer); }
std::string gat_attention_block(std::size_t layer) { return fmt::format("gat{}.attention", layer); }

// ---------------------------------------------------------------- layout

ParamLayout::ParamLayout(const ModelConfig& c) {
  c.validate();
  add("role.embeddings", kRoleKeys, c.role_dim);
  add("role.projection", c.text_dim, c.role_dim);
  for (std::size_t l = 0; l < c.gat_layers; ++l) {
    add(gat_weight_block(l), c.gat_hidden, l == 0 ? 2 * c.text_dim : c.gat_hidden);
    add(gat_attention_block(l), 1, 2 * c.gat_hidden);
  }
  add("interaction.W_g", c.proj_dim, c.gat_hidden);
  add("interaction.W_e", c.proj_dim, c.text_dim);
  add("mha.W_q", c.proj_dim, c.proj_dim);
  add("mha.W_k", c.proj_dim, c.proj_dim);
  add("mha.W_v", c.proj_dim, c.proj_dim);
  add("mha.W_o", c.proj_dim, c.proj_dim);
  add("classifier.W_fc", 2, 2 * c.proj_dim);
  add("classifier.b_fc", 1, 2);
}

void ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
  blocks_.push_back({std::move(name), total_, rows, cols});
  total_ += rows * cols;
}

const ParamBlock& ParamLayout::find(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw PreconditionError(fmt::format("unknown parameter block '{}'", name));
}

bool ParamLayout::contains(std::string_view name) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const ParamBlock& b) { return b.name == name; });
}

MatrixView ParamLayout::view(std::span<double> flat, std::string_view name) const {
  const auto& b = find(name);
  return {flat.data() + b.offset, b.rows, b.cols};
}

ConstMatrixView ParamLayout::cview(std::span<const double> flat, std::string_view name) const {
  const auto& b = find(name);
  return {flat.data() + b.offset, b.rows, b.cols};
}

// ---------------------------------------------------------------- model

AnalysisModel::AnalysisModel(ModelConfig config, std::uint64_t seed)
    : config_(config), seed_(seed), layout_(config_), params_(layout_.total(), 0.0) {
  std::mt19937_64 rng(seed);
  for (const auto& b : layout_.blocks()) {
    double bound = 0.0;
    if (b.name == "role.embeddings") {
      bound = 0.1;
    } else if (b.name != "classifier.b_fc") {
      bound = 1.0 / std::sqrt(static_cast<double>(b.cols));
    }
    for (std::size_t k = 0; k < b.size(); ++k) {
      params_[b.offset + k] = bound * (2.0 * unit_interval(rng()) - 1.0);
    }
  }
}

AnalysisModel::AnalysisModel(ModelConfig config, std::uint64_t seed, std::vector<double> parameters)
    : config_(config), seed_(seed), layout_(config_), params_(std::move(parameters)) {
  if (params_.size() != layout_.total()) {
    throw DimensionError(fmt::format("{} parameters given, model needs {}", params_.size(), layout_.total()));
  }
}

RoleTableView AnalysisModel::role_table() const {
  return {block("role.embeddings").flat(), block("role.projection").flat(), config_.text_dim, config_.role_dim};
}

nn::GatLayerView AnalysisModel::gat_layer(std::size_t layer) const {
  return {block(gat_weight_block(layer)), block(gat_attention_block(layer)).flat()};
}

nn::InteractionView AnalysisModel::interaction() const {
  return {block("interaction.W_g"), block("interaction.W_e"), block("mha.W_q"), block("mha.W_k"),
          block("mha.W_v"),         block("mha.W_o"),         config_.heads};
}

nn::ClassifierView AnalysisModel::classifier() const {
  return {block("classifier.W_fc"), block("classifier.b_fc").flat()};
}

// ---------------------------------------------------------------- forward / backward

namespace {

void check_sample(const AnalysisModel& model, const GraphSample& s) {
  const std::size_t d = model.config().text_dim;
  if (s.graph.num_nodes == 0) throw PreconditionError(fmt::format("sample {} has an empty graph", s.id));
  if (s.graph.in_neighbors.size() != s.graph.num_nodes || s.graph.meta.size() != s.graph.num_nodes) {
    throw PreconditionError(fmt::format("sample {} has an inconsistent graph", s.id));
  }
  if (s.text_embeddings.rows() != s.graph.num_nodes || s.text_embeddings.cols() != d) {
    throw DimensionError(fmt::format("sample {} has {}x{} text embeddings, expected {}x{}", s.id,
                                     s.text_embeddings.rows(), s.text_embeddings.cols(), s.graph.num_nodes, d));
  }
  if (s.news_embedding.size() != d) {
    throw DimensionError(fmt::format("sample {} news embedding has dimension {}, expected {}", s.id,
                                     s.news_embedding.size(), d));
  }
}

int label_of(const GraphSample& s) {
  if (!s.label) throw PreconditionError(fmt::format("sample {} has no label", s.id));
  return static_cast<int>(label_index(*s.label));
}

}  // namespace

Matrix assemble_node_features(const AnalysisModel& model, const GraphSample& sample) {
  check_sample(model, sample);
  const std::size_t d = model.config().text_dim;
  const RoleTableView table = model.role_table();
  Matrix x(sample.graph.num_nodes, 2 * d);
  for (std::size_t i = 0; i < sample.graph.num_nodes; ++i) {
    auto row = x.row(i);
    const auto text = sample.text_embeddings.row(i);
    std::copy(text.begin(), text.end(), row.begin());
    project_role(table, sample.graph.meta[i].role_key(), row.subspan(d));
  }
  return x;
}

std::array<double, 2> predict_proba(const AnalysisModel& model, const GraphSample& sample, kernels::Exec exec,
                                    ForwardTrace* trace) {
  const ModelConfig& c = model.config();
  Matrix x = assemble_node_features(model, sample);
  std::vector<nn::GatTrace> layer_traces(trace ? c.gat_layers : 0);
  Matrix h = x;
  for (std::size_t l = 0; l < c.gat_layers; ++l) {
    const bool last = l + 1 == c.gat_layers;
    h = nn::gat_forward(model.gat_layer(l), h.cview(), sample.graph, !last, exec,
                        trace ? &layer_traces[l] : nullptr);
  }
  const std::vector<double> pooled = nn::global_mean_pool(h.cview());
  nn::InteractionTrace itrace;
  std::vector<double> fused = nn::interact(sample.news_embedding, h.cview(), pooled, model.interaction(), c.mode, exec,
                                           trace ? &itrace : nullptr);
  const auto probs = nn::classify(fused, model.classifier());
  if (trace) {
    trace->inputs = std::move(x);
    trace->layers = std::move(layer_traces);
    trace->interaction = std::move(itrace);
    trace->fused = std::move(fused);
    trace->probs = probs;
  }
  return probs;
}

double sample_loss_and_gradient(const AnalysisModel& model, const GraphSample& sample, std::span<double> grad,
                                kernels::Exec exec) {
  const ParamLayout& layout = model.layout();
  if (grad.size() != layout.total()) throw DimensionError("gradient buffer does not match the parameter count");
  const int y = label_of(sample);
  const ModelConfig& c = model.config();

  ForwardTrace t;
  predict_proba(model, sample, exec, &t);
  const double loss = nn::cross_entropy(t.probs, y);

  std::vector<double> d_fused(t.fused.size(), 0.0);
  nn::classifier_backward(t.fused, model.classifier(), t.probs, y,
                          {layout.view(grad, "classifier.W_fc"), layout.view(grad, "classifier.b_fc").flat()}, d_fused);

  const std::size_t n = sample.graph.num_nodes;
  const Matrix& top = t.layers.back().output;
  Matrix d_top(n, c.gat_hidden);
  std::vector<double> d_pooled(c.gat_hidden, 0.0);
  nn::interact_backward(sample.news_embedding, top.cview(), model.interaction(), c.mode, t.interaction, d_fused,
                        {layout.view(grad, "interaction.W_g"), layout.view(grad, "interaction.W_e"),
                         layout.view(grad, "mha.W_q"), layout.view(grad, "mha.W_k"), layout.view(grad, "mha.W_v"),
                         layout.view(grad, "mha.W_o")},
                        d_top.view(), d_pooled, exec);
  nn::global_mean_pool_backward(d_pooled, d_top.view());

  Matrix d_out = std::move(d_top);
  for (std::size_t l = c.gat_layers; l-- > 0;) {
    const Matrix& input = l == 0 ? t.inputs : t.layers[l - 1].output;
    Matrix d_in(n, input.cols());
    nn::gat_backward(model.gat_layer(l), input.cview(), sample.graph, t.layers[l], d_out.cview(),
                     {layout.view(grad, gat_weight_block(l)), layout.view(grad, gat_attention_block(l)).flat()},
                     d_in.view(), exec);
    d_out = std::move(d_in);
  }

  // Role tail of X0: r_i = W_role e_k.
  const std::size_t d = c.text_dim;
  const std::size_t dr = c.role_dim;
  const ConstMatrixView w_role = model.block("role.projection");
  const ConstMatrixView emb = model.block("role.embeddings");
  MatrixView g_role = layout.view(grad, "role.projection");
  MatrixView g_emb = layout.view(grad, "role.embeddings");
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = sample.graph.meta[i].role_key();
    if (!key) continue;
    const auto d_tail = d_out.row(i).subspan(d);
    const auto e = emb.row(*key);
    auto ge = g_emb.row(*key);
    for (std::size_t r = 0; r < d; ++r) {
      const double g = d_tail[r];
      auto gw = g_role.row(r);
      const auto w = w_role.row(r);
      for (std::size_t k = 0; k < dr; ++k) {
        gw[k] += g * e[k];
        ge[k] += g * w[k];
      }
    }
  }
  return loss;
}

void require_finite(const ParamLayout& layout, std::span<const double> values, std::string_view what) {
  std::vector<std::string> bad;
  for (const auto& b : layout.blocks()) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (!std::isfinite(values[b.offset + k])) {
        bad.push_back(b.name);
        break;
      }
    }
  }
  if (!bad.empty()) throw NumericalFault(fmt::format("non-finite {} in {}", what, fmt::join(bad, ", ")));
}

BatchGradient batch_gradient(const AnalysisModel& model, std::span<const GraphSample* const> batch,
                             kernels::Exec exec) {
  if (batch.empty()) throw PreconditionError("empty batch");
  const std::size_t total = model.layout().total();
  std::vector<std::vector<double>> parts(batch.size(), std::vector<double>(total, 0.0));
  BatchGradient out;
  out.losses.assign(batch.size(), 0.0);

  std::vector<std::exception_ptr> errors(batch.size());
  const long count = static_cast<long>(batch.size());
#pragma omp parallel for schedule(dynamic, 1) if (exec == kernels::Exec::Parallel && count > 1)
  for (long b = 0; b < count; ++b) {
    const auto k = static_cast<std::size_t>(b);
    try {
      out.losses[k] = sample_loss_and_gradient(model, *batch[k], parts[k], kernels::Exec::Serial);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (!std::isfinite(out.losses[k])) throw NumericalFault(fmt::format("non-finite loss for sample {}", batch[k]->id));
  }

  std::vector<std::span<const double>> views(parts.begin(), parts.end());
  out.grad.assign(total, 0.0);
  kernels::sum_ordered(exec, views, out.grad);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : out.grad) g *= inv;
  require_finite(model.layout(), out.grad, "gradient");

  double loss_sum = 0.0;
  for (double l : out.losses) loss_sum += l;
  out.mean_loss = loss_sum / static_cast<double>(batch.size());
  return out;
}

}  // namespace veridebate
