#include "veridebate/debate_graph.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "veridebate/errors.hpp"

namespace veridebate {

namespace {

void index_neighbors(DebateGraph& g) {
  g.in_neighbors.assign(g.num_nodes, {});
  for (const Edge& e : g.edges) g.in_neighbors[e.dst].push_back(e.src);
  for (auto& list : g.in_neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

}  // namespace

std::optional<std::size_t> NodeMeta::role_key() const {
  if (!role || !stance) return std::nullopt;
  return veridebate::role_key(*role, *stance);
}

DebateGraph build_topology(const DebateLog& log) {
  DebateGraph g;
  g.num_nodes = log.turns.size();
  if (g.num_nodes == 0) throw PreconditionError("cannot build a graph from an empty debate log");
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    const DebateTurn& t = log.turns[i];
    if (t.turn_index != i) {
      throw PreconditionError(fmt::format("turn at position {} has turn_index {}", i, t.turn_index));
    }
    g.meta.push_back({t.stance, t.role, t.stage});
  }

  for (std::size_t i = 0; i < g.num_nodes; ++i) g.edges.push_back({i, i});
  for (std::size_t i = 0; i + 1 < g.num_nodes; ++i) {
    g.edges.push_back({i, i + 1});
    g.edges.push_back({i + 1, i});
  }
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    for (std::size_t t : log.turns[i].targets) {
      if (t >= i) throw PreconditionError(fmt::format("forward reference at turn {}", i));
      g.edges.push_back({i, t});
      g.edges.push_back({t, i});
    }
  }
  index_neighbors(g);
  return g;
}

DebateGraph build_graph(const DebateLog& log, std::span<const NodeVector> nodes) {
  if (nodes.size() != log.turns.size()) {
    throw PreconditionError(fmt::format("{} node vectors for {} turns", nodes.size(), log.turns.size()));
  }
  DebateGraph g = build_topology(log);
  const std::size_t width = nodes.front().size();
  g.node_features = Matrix(g.num_nodes, width);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].size() != width) throw DimensionError("node vectors have inconsistent dimensions");
    std::copy(nodes[i].begin(), nodes[i].end(), g.node_features.row(i).begin());
  }
  return g;
}

DebateGraph single_node_graph() {
  const Edge loop{0, 0};
  return graph_from_edges(1, std::span<const Edge>(&loop, 1), {NodeMeta{}});
}

DebateGraph graph_from_edges(std::size_t num_nodes, std::span<const Edge> edges, std::vector<NodeMeta> meta) {
  if (num_nodes == 0) throw PreconditionError("graph needs at least one node");
  DebateGraph g;
  g.num_nodes = num_nodes;
  g.meta = meta.empty() ? std::vector<NodeMeta>(num_nodes) : std::move(meta);
  if (g.meta.size() != num_nodes) throw PreconditionError("node metadata length mismatch");
  for (std::size_t i = 0; i < num_nodes; ++i) g.edges.push_back({i, i});
  for (const Edge& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) throw PreconditionError("edge endpoint out of range");
    if (e.src != e.dst) g.edges.push_back(e);
  }
  index_neighbors(g);
  return g;
}

std::vector<std::size_t> neighbors(const DebateGraph& g, std::size_t i) {
  if (i >= g.num_nodes) {
    throw PreconditionError(fmt::format("node {} out of range for a {}-node graph", i, g.num_nodes));
  }
  return g.in_neighbors[i];
}

nlohmann::json graph_to_json(const DebateGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges) edges.push_back({e.src, e.dst});
  return {{"num_nodes", g.num_nodes}, {"edges", std::move(edges)}};
}

}  // namespace veridebate
