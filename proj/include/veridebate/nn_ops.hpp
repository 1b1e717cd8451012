#pragma once

#include <array>
#include <span>
#include <vector>

#include "veridebate/debate_graph.hpp"
#include "veridebate/kernels.hpp"
#include "veridebate/tensor.hpp"

namespace veridebate::nn {

using kernels::Exec;

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kProbabilityFloor = 1e-12;

double elu(double x);
/// d elu / dx evaluated at the pre-activation x.
double elu_derivative(double x);
double leaky_relu(double x);
double leaky_relu_derivative(double x);

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);

// ---------------------------------------------------------------- GAT

struct GatLayerView {
  ConstMatrixView weight;             // out x in
  std::span<const double> attention;  // [a_src ; a_nbr], length 2*out
};

struct GatGradView {
  MatrixView weight;
  std::span<double> attention;
};

struct GatTrace {
  Matrix projected;                       // Z = X W^T
  Matrix aggregated;                      // sum_j alpha_ij Z_j, before the activation
  Matrix output;                          // activation(aggregated)
  std::vector<std::vector<double>> logit_inputs;  // per node, per neighbor: a_src.Z_i + a_nbr.Z_j
  std::vector<std::vector<double>> alpha;          // per node, softmax over in_neighbors[i]
  bool activate = true;
};

/// h_i' = act(sum_{j in N(i)} alpha_ij W h_j) with
/// alpha_ij = softmax_j leakyReLU(a^T [W h_i ; W h_j]); act = ELU or identity.
Matrix gat_forward(const GatLayerView& layer, ConstMatrixView features, const DebateGraph& graph, bool activate,
                   Exec exec = Exec::Serial, GatTrace* trace = nullptr);

/// Accumulates parameter gradients into `grads` and input gradients into `d_features`.
void gat_backward(const GatLayerView& layer, ConstMatrixView features, const DebateGraph& graph,
                  const GatTrace& trace, ConstMatrixView d_output, const GatGradView& grads, MatrixView d_features,
                  Exec exec = Exec::Serial);

// ---------------------------------------------------------------- pooling

std::vector<double> global_mean_pool(ConstMatrixView features);
/// d_features[i] += d_pooled / n for every row.
void global_mean_pool_backward(std::span<const double> d_pooled, MatrixView d_features);

// ---------------------------------------------------------------- interactive attention

enum class InteractionMode { Nodes, Pooled };

struct InteractionView {
  ConstMatrixView w_g;  // d_p x gat_out
  ConstMatrixView w_e;  // d_p x d_h
  ConstMatrixView w_q;  // d_p x d_p, rows grouped by head
  ConstMatrixView w_k;
  ConstMatrixView w_v;
  ConstMatrixView w_o;
  std::size_t heads = 1;
};

struct InteractionGradView {
  MatrixView w_g, w_e, w_q, w_k, w_v, w_o;
};

struct InteractionTrace {
  std::vector<double> pooled;
  std::vector<double> g_proj;
  std::vector<double> e_proj;
  std::vector<double> query;
  Matrix sources;  // keys/values before their projections: one row (pooled) or one per node
  Matrix keys;
  Matrix values;
  std::vector<std::vector<double>> weights;  // per head, one weight per source row
  std::vector<double> attended;              // concatenated head outputs
  std::vector<double> context;               // c = W_o * attended
};

/// Returns h = [W_g g ; c] with c = MHA(query = W_e e_F, keys/values = sources),
/// where sources is {W_g g} (Pooled) or {W_g h_i} per node (Nodes).
std::vector<double> interact(std::span<const double> news_embedding, ConstMatrixView node_features,
                             std::span<const double> pooled, const InteractionView& head, InteractionMode mode,
                             Exec exec = Exec::Serial, InteractionTrace* trace = nullptr);

void interact_backward(std::span<const double> news_embedding, ConstMatrixView node_features,
                       const InteractionView& head, InteractionMode mode, const InteractionTrace& trace,
                       std::span<const double> d_fused, const InteractionGradView& grads, MatrixView d_node_features,
                       std::span<double> d_pooled, Exec exec = Exec::Serial);

// ---------------------------------------------------------------- classifier

struct ClassifierView {
  ConstMatrixView weight;        // 2 x 2*d_p
  std::span<const double> bias;  // 2
};

struct ClassifierGradView {
  MatrixView weight;
  std::span<double> bias;
};

std::array<double, 2> classifier_logits(std::span<const double> fused, const ClassifierView& head);

/// softmax(W_fc h + b_fc)
std::array<double, 2> classify(std::span<const double> fused, const ClassifierView& head);

/// -log max(probs[label], 1e-12)
double cross_entropy(const std::array<double, 2>& probs, int label);

/// Gradient of cross_entropy through the softmax. Zero when the clamp is active.
void classifier_backward(std::span<const double> fused, const ClassifierView& head, const std::array<double, 2>& probs,
                         int label, const ClassifierGradView& grads, std::span<double> d_fused);

}  // namespace veridebate::nn
