#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace netadmm {

using NodeId = std::size_t;

// Undirected communication graph stored as per-node sorted neighbor lists.
// Each undirected edge appears twice (i -> j and j -> i), so a directed edge
// is addressed by (node, position in that node's neighbor list).
class Graph {
 public:
  // Validates symmetry, absence of self-loops, sorted lists and connectivity.
  // Throws std::invalid_argument when any of them fails.
  explicit Graph(std::vector<std::vector<NodeId>> neighbors);

  std::size_t num_nodes() const { return neighbors_.size(); }
  const std::vector<NodeId>& neighbors(NodeId i) const { return neighbors_.at(i); }
  std::size_t degree(NodeId i) const { return neighbors_.at(i).size(); }
  std::size_t num_directed_edges() const;

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::vector<NodeId>> neighbors_;
};

bool is_connected(const std::vector<std::vector<NodeId>>& neighbors);

Graph build_complete(std::size_t n);
Graph build_ring(std::size_t n);
// Two complete halves joined by the bridge (n/2 - 1, n/2).
Graph build_cluster(std::size_t n);

// "complete" | "ring" | "cluster"
Graph build_topology(std::string_view name, std::size_t n);

}  // namespace netadmm
