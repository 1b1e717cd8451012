#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "veridebate/domain.hpp"
#include "veridebate/encoding.hpp"
#include "veridebate/tensor.hpp"

namespace veridebate {

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  bool operator==(const Edge&) const = default;
};

/// Per-node debate metadata. A news-only node (no_debate ablation) has no role.
struct NodeMeta {
  std::optional<Stance> stance;
  std::optional<DebateRole> role;
  std::optional<DebateStage> stage;

  std::optional<std::size_t> role_key() const;
  bool operator==(const NodeMeta&) const = default;
};

/// Fixed debate graph. `edges` lists every edge the construction rule emits,
/// in emission order: self-loops, sequential pairs, then reference pairs. An
/// edge emitted by two rules appears twice; in_neighbors holds the set N(i).
struct DebateGraph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  std::vector<NodeMeta> meta;
  std::vector<std::vector<std::size_t>> in_neighbors;  // sorted, unique, always contains i
  Matrix node_features;                                // num_nodes x 2*d_h; empty for topology-only graphs

  bool operator==(const DebateGraph&) const = default;
};

/// Topology and metadata only. Requires targets to be in range and strictly backward.
DebateGraph build_topology(const DebateLog& log);

/// Topology plus node features. Precondition: nodes.size() == log.turns.size().
DebateGraph build_graph(const DebateLog& log, std::span<const NodeVector> nodes);

/// One isolated node with a self-loop and no role.
DebateGraph single_node_graph();

/// Arbitrary graph for tests: self-loops are added, edges are taken as given.
DebateGraph graph_from_edges(std::size_t num_nodes, std::span<const Edge> edges, std::vector<NodeMeta> meta = {});

/// {j : (j, i) in edges}. Throws PreconditionError when i is out of range.
std::vector<std::size_t> neighbors(const DebateGraph& g, std::size_t i);

/// {num_nodes, edges:[[src,dst],...]}
nlohmann::json graph_to_json(const DebateGraph& g);

}  // namespace veridebate
