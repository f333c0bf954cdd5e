#include "netadmm/topology.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace netadmm {

namespace {

void add_edge(std::vector<std::vector<NodeId>>& adj, NodeId a, NodeId b) {
  adj[a].push_back(b);
  adj[b].push_back(a);
}

Graph finish(std::vector<std::vector<NodeId>> adj) {
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return Graph(std::move(adj));
}

}  // namespace

bool is_connected(const std::vector<std::vector<NodeId>>& neighbors) {
  if (neighbors.empty()) return false;
  std::vector<bool> seen(neighbors.size(), false);
  std::queue<NodeId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    for (NodeId v : neighbors[u]) {
      if (v < neighbors.size() && !seen[v]) {
        seen[v] = true;
        ++visited;
        frontier.push(v);
      }
    }
  }
  return visited == neighbors.size();
}

Graph::Graph(std::vector<std::vector<NodeId>> neighbors) : neighbors_(std::move(neighbors)) {
  const std::size_t n = neighbors_.size();
  if (n == 0) throw std::invalid_argument("graph must have at least one node");
  for (NodeId i = 0; i < n; ++i) {
    const auto& list = neighbors_[i];
    if (!std::is_sorted(list.begin(), list.end()) ||
        std::adjacent_find(list.begin(), list.end()) != list.end())
      throw std::invalid_argument("neighbor list of node " + std::to_string(i) +
                                  " must be strictly ascending");
    for (NodeId j : list) {
      if (j >= n) throw std::invalid_argument("neighbor id out of range at node " + std::to_string(i));
      if (j == i) throw std::invalid_argument("self-loop at node " + std::to_string(i));
      const auto& back = neighbors_[j];
      if (!std::binary_search(back.begin(), back.end(), i))
        throw std::invalid_argument("asymmetric edge " + std::to_string(i) + "->" + std::to_string(j));
    }
  }
  if (!is_connected(neighbors_)) throw std::invalid_argument("graph is not connected");
}

std::size_t Graph::num_directed_edges() const {
  std::size_t total = 0;
  for (const auto& list : neighbors_) total += list.size();
  return total;
}

Graph build_complete(std::size_t n) {
  if (n == 0) throw std::invalid_argument("complete graph needs n >= 1");
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) add_edge(adj, i, j);
  return finish(std::move(adj));
}

Graph build_ring(std::size_t n) {
  if (n < 3) throw std::invalid_argument("ring graph needs n >= 3");
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId i = 0; i < n; ++i) add_edge(adj, i, (i + 1) % n);
  return finish(std::move(adj));
}

Graph build_cluster(std::size_t n) {
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("cluster graph needs an even n >= 4");
  const std::size_t half = n / 2;
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId base : {NodeId{0}, half})
    for (NodeId i = base; i < base + half; ++i)
      for (NodeId j = i + 1; j < base + half; ++j) add_edge(adj, i, j);
  add_edge(adj, half - 1, half);
  return finish(std::move(adj));
}

Graph build_topology(std::string_view name, std::size_t n) {
  if (name == "complete") return build_complete(n);
  if (name == "ring") return build_ring(n);
  if (name == "cluster") return build_cluster(n);
  throw std::invalid_argument("unknown topology '" + std::string(name) + "'");
}

}  // namespace netadmm
