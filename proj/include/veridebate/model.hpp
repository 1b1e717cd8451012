#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veridebate/debate_graph.hpp"
#include "veridebate/domain.hpp"
#include "veridebate/encoding.hpp"
#include "veridebate/nn_ops.hpp"

namespace veridebate {

using nn::InteractionMode;

std::string to_string(InteractionMode mode);
InteractionMode parse_interaction_mode(std::string_view text);

struct ModelConfig {
  std::size_t text_dim = 384;
  std::size_t role_dim = 16;
  std::size_t gat_layers = 2;
  std::size_t gat_hidden = 128;
  std::size_t proj_dim = 128;
  std::size_t heads = 4;
  InteractionMode mode = InteractionMode::Nodes;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Named, contiguous slices of a flat parameter vector.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelConfig& config);

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& find(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t total() const { return total_; }

  MatrixView view(std::span<double> flat, std::string_view name) const;
  ConstMatrixView cview(std::span<const double> flat, std::string_view name) const;

 private:
  void add(std::string name, std::size_t rows, std::size_t cols);
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
};

/// Input to the analysis model: the debate graph topology plus the text
/// embedding of every node and of the news item.
struct GraphSample {
  std::string id;
  DebateGraph graph;
  Matrix text_embeddings;  // num_nodes x text_dim
  std::vector<double> news_embedding;
  std::optional<Label> label;
};

/// Role table + GAT stack + news/graph interaction + classifier, over one flat
/// parameter vector so the optimizer and checkpoint see a single buffer.
class AnalysisModel {
 public:
  AnalysisModel(ModelConfig config, std::uint64_t seed);
  /// Wraps existing parameters; throws DimensionError on a size mismatch.
  AnalysisModel(ModelConfig config, std::uint64_t seed, std::vector<double> parameters);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  MatrixView block(std::string_view name) { return layout_.view(std::span<double>(params_), name); }
  ConstMatrixView block(std::string_view name) const { return layout_.cview(params_, name); }

  RoleTableView role_table() const;
  nn::GatLayerView gat_layer(std::size_t layer) const;
  nn::InteractionView interaction() const;
  nn::ClassifierView classifier() const;

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  ParamLayout layout_;
  std::vector<double> params_;
};

std::string gat_weight_block(std::size_t layer);
std::string gat_attention_block(std::size_t layer);

/// X0 rows: [text_i ; W_role e_(role_i, stance_i)] (zero tail for role-less nodes).
Matrix assemble_node_features(const AnalysisModel& model, const GraphSample& sample);

/// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
  Matrix inputs;
  std::vector<nn::GatTrace> layers;
  nn::InteractionTrace interaction;
  std::vector<double> fused;
  std::array<double, 2> probs{};
};

/// (p_real, p_fake).
std::array<double, 2> predict_proba(const AnalysisModel& model, const GraphSample& sample,
                                    kernels::Exec exec = kernels::Exec::Serial, ForwardTrace* trace = nullptr);

/// Cross-entropy of one labeled sample; adds d loss / d params into `grad`.
double sample_loss_and_gradient(const AnalysisModel& model, const GraphSample& sample, std::span<double> grad,
                                kernels::Exec exec = kernels::Exec::Serial);

struct BatchGradient {
  std::vector<double> grad;       // mean over the batch
  std::vector<double> losses;     // per sample, in batch order
  double mean_loss = 0.0;
};

/// Per-sample gradients (in parallel under Exec::Parallel) reduced in batch order,
/// so the result does not depend on the thread count. Throws NumericalFault on
/// a non-finite loss or gradient, naming the affected parameter blocks.
BatchGradient batch_gradient(const AnalysisModel& model, std::span<const GraphSample* const> batch,
                             kernels::Exec exec = kernels::Exec::Serial);

/// Throws NumericalFault listing the blocks that contain a non-finite value.
void require_finite(const ParamLayout& layout, std::span<const double> values, std::string_view what);

}  // namespace veridebate
