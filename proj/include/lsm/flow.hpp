#ifndef LSM_FLOW_HPP_
#define LSM_FLOW_HPP_

#include <vector>

#include "lsm/types.hpp"

namespace lsm {

// Integer-capacity max-flow (Dinic).  Node count fixed at construction.
class MaxFlow {
 public:
  explicit MaxFlow(int n_nodes);
  void add_edge(int from, int to, int capacity);
  int solve(int source, int sink);

 private:
  struct Edge {
    int to, cap;
    std::size_t rev;
  };
  bool bfs(int s, int t);
  int dfs(int v, int t, int f);

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_, iter_;
};

// Largest matching in a bipartite graph given as adjacency lists
// left -> right.  Returns match_right[r] = matched left node or -1.
int max_bipartite_matching(const std::vector<std::vector<int>>& adj,
                           int n_right, std::vector<int>* match_right);

// Minimum-cost assignment of `demand` time indices to each of s groups.
// cost(i, t) >= 0 is the price of giving index t to group i; each index
// serves at most one group.  Returns the optimal total cost and fills
// groups[i] with the chosen indices.  Exact (successive shortest paths).
double min_cost_assignment(const Matrix& cost, int demand,
                           std::vector<std::vector<int>>* groups);

}  // namespace lsm

#endif  // LSM_FLOW_HPP_
