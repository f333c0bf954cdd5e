#include "doctest.h"

#include "netadmm/topology.hpp"

#include <stdexcept>

using namespace netadmm;
using Lists = std::vector<std::vector<NodeId>>;

namespace {

// Symmetry, no self-loops and connectivity, checked independently of the
// Graph constructor.
void check_invariants(const Graph& g) {
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (NodeId j : g.neighbors(i)) {
      CHECK(j != i);
      const auto& back = g.neighbors(j);
      CHECK(std::find(back.begin(), back.end(), i) != back.end());
    }
    CHECK(std::is_sorted(g.neighbors(i).begin(), g.neighbors(i).end()));
  }
  std::vector<bool> seen(g.num_nodes(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u))
      if (!seen[v]) seen[v] = stack.emplace_back(v), true;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

}  // namespace

TEST_CASE("complete graph") {
  CHECK(build_complete(3) == Graph(Lists{{1, 2}, {0, 2}, {0, 1}}));
  CHECK(build_complete(1) == Graph(Lists{{}}));
  const Graph g = build_complete(20);
  for (NodeId i = 0; i < 20; ++i) CHECK(g.degree(i) == 19);
  check_invariants(g);
  CHECK_THROWS_AS(build_complete(0), std::invalid_argument);
}

TEST_CASE("ring graph") {
  CHECK(build_ring(4) == Graph(Lists{{1, 3}, {0, 2}, {1, 3}, {0, 2}}));
  CHECK(build_ring(3) == build_complete(3));
  const Graph g = build_ring(20);
  for (NodeId i = 0; i < 20; ++i) CHECK(g.degree(i) == 2);
  check_invariants(g);
  CHECK_THROWS_AS(build_ring(2), std::invalid_argument);
}

TEST_CASE("cluster graph") {
  CHECK(build_cluster(4) == Graph(Lists{{1}, {0, 2}, {1, 3}, {2}}));
  CHECK(build_cluster(6).neighbors(2) == std::vector<NodeId>{0, 1, 3});
  const Graph g = build_cluster(20);
  for (NodeId i = 0; i < 20; ++i) CHECK(g.degree(i) == (i == 9 || i == 10 ? 10u : 9u));
  check_invariants(g);
  CHECK_THROWS_AS(build_cluster(5), std::invalid_argument);
  CHECK_THROWS_AS(build_cluster(2), std::invalid_argument);
}

TEST_CASE("degree formulas hold across sizes") {
  for (std::size_t n = 4; n <= 24; n += 2) {
    const Graph c = build_complete(n), r = build_ring(n), k = build_cluster(n);
    check_invariants(c);
    check_invariants(r);
    check_invariants(k);
    CHECK(c.num_directed_edges() == n * (n - 1));
    CHECK(r.num_directed_edges() == 2 * n);
    CHECK(k.num_directed_edges() == 2 * (n / 2) * (n / 2 - 1) + 2);
  }
}

TEST_CASE("constructor rejects invalid adjacency") {
  CHECK_THROWS_AS(Graph(Lists{{1}, {}}), std::invalid_argument);           // asymmetric
  CHECK_THROWS_AS(Graph(Lists{{0}}), std::invalid_argument);               // self-loop
  CHECK_THROWS_AS(Graph(Lists{{1}, {0}, {3}, {2}}), std::invalid_argument); // disconnected
  CHECK_THROWS_AS(Graph(Lists{{2, 1}, {0}, {0}}), std::invalid_argument);  // unsorted
  CHECK_THROWS_AS(build_topology("star", 5), std::invalid_argument);
  CHECK(build_topology("ring", 5) == build_ring(5));
}
