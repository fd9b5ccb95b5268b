#include "lsm/flow.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

namespace lsm {

MaxFlow::MaxFlow(int n_nodes) : graph_(n_nodes), level_(n_nodes), iter_(n_nodes) {}

void MaxFlow::add_edge(int from, int to, int capacity) {
  graph_[from].push_back({to, capacity, graph_[to].size()});
  graph_[to].push_back({from, 0, graph_[from].size() - 1});
}

bool MaxFlow::bfs(int s, int t) {
  std::fill(level_.begin(), level_.end(), -1);
  std::queue<int> q;
  level_[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (const Edge& e : graph_[v]) {
      if (e.cap > 0 && level_[e.to] < 0) {
        level_[e.to] = level_[v] + 1;
        q.push(e.to);
      }
    }
  }
  return level_[t] >= 0;
}

int MaxFlow::dfs(int v, int t, int f) {
  if (v == t) return f;
  for (int& i = iter_[v]; i < static_cast<int>(graph_[v].size()); ++i) {
    Edge& e = graph_[v][i];
    if (e.cap > 0 && level_[v] < level_[e.to]) {
      const int d = dfs(e.to, t, std::min(f, e.cap));
      if (d > 0) {
        e.cap -= d;
        graph_[e.to][e.rev].cap += d;
        return d;
      }
    }
  }
  return 0;
}

int MaxFlow::solve(int source, int sink) {
  int flow = 0;
  while (bfs(source, sink)) {
    std::fill(iter_.begin(), iter_.end(), 0);
    int f;
    while ((f = dfs(source, sink, std::numeric_limits<int>::max())) > 0) flow += f;
  }
  return flow;
}

int max_bipartite_matching(const std::vector<std::vector<int>>& adj,
                           int n_right, std::vector<int>* match_right) {
  const int n_left = static_cast<int>(adj.size());
  std::vector<int> match(n_right, -1);
  std::vector<bool> used;
  // Kuhn's augmenting paths; deterministic order.
  std::function<bool(int)> try_kuhn = [&](int v) -> bool {
    for (int to : adj[v]) {
      if (used[to]) continue;
      used[to] = true;
      if (match[to] == -1 || try_kuhn(match[to])) {
        match[to] = v;
        return true;
      }
    }
    return false;
  };
  int size = 0;
  for (int v = 0; v < n_left; ++v) {
    used.assign(n_right, false);
    if (try_kuhn(v)) ++size;
  }
  if (match_right) *match_right = std::move(match);
  return size;
}

double min_cost_assignment(const Matrix& cost, int demand,
                           std::vector<std::vector<int>>* groups) {
  const int s = static_cast<int>(cost.rows());
  const int N = static_cast<int>(cost.cols());
  if (demand < 0 || s * demand > N)
    throw std::invalid_argument("min_cost_assignment: infeasible demand");
  if ((cost.array() < 0).any())
    throw std::invalid_argument("min_cost_assignment: negative cost");

  // nodes: 0 = source, 1..s = groups, s+1..s+N = indices, s+N+1 = sink
  const int V = s + N + 2;
  const int src = 0;
  const int snk = V - 1;

  struct Edge {
    int to, cap;
    double cost;
    std::size_t rev;
  };
  std::vector<std::vector<Edge>> g(V);
  auto add_edge = [&](int from, int to, int cap, double c) {
    g[from].push_back({to, cap, c, g[to].size()});
    g[to].push_back({from, 0, -c, g[from].size() - 1});
  };
  for (int i = 0; i < s; ++i) add_edge(src, 1 + i, demand, 0.0);
  for (int i = 0; i < s; ++i)
    for (int t = 0; t < N; ++t) add_edge(1 + i, s + 1 + t, 1, cost(i, t));
  for (int t = 0; t < N; ++t) add_edge(s + 1 + t, snk, 1, 0.0);

  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0;
  int flow_needed = s * demand;
  std::vector<double> dist(V);
  std::vector<int> prev_v(V), prev_e(V);
  while (flow_needed > 0) {
    // Bellman-Ford shortest augmenting path (costs may turn negative on
    // residual arcs)
    std::fill(dist.begin(), dist.end(), inf);
    dist[src] = 0.0;
    for (int pass = 0; pass < V; ++pass) {
      bool updated = false;
      for (int v = 0; v < V; ++v) {
        if (dist[v] == inf) continue;
        for (std::size_t k = 0; k < g[v].size(); ++k) {
          const Edge& e = g[v][k];
          if (e.cap > 0 && dist[v] + e.cost < dist[e.to] - 1e-15) {
            dist[e.to] = dist[v] + e.cost;
            prev_v[e.to] = v;
            prev_e[e.to] = static_cast<int>(k);
            updated = true;
          }
        }
      }
      if (!updated) break;
    }
    if (dist[snk] == inf)
      throw std::runtime_error("min_cost_assignment: disconnected network");
    int d = flow_needed;
    for (int v = snk; v != src; v = prev_v[v])
      d = std::min(d, g[prev_v[v]][prev_e[v]].cap);
    for (int v = snk; v != src; v = prev_v[v]) {
      Edge& e = g[prev_v[v]][prev_e[v]];
      e.cap -= d;
      g[v][e.rev].cap += d;
    }
    total += d * dist[snk];
    flow_needed -= d;
  }

  if (groups) {
    groups->assign(s, {});
    for (int i = 0; i < s; ++i)
      for (const Edge& e : g[1 + i])
        if (e.to >= s + 1 && e.to < s + 1 + N && e.cap == 0)
          (*groups)[i].push_back(e.to - s - 1);
  }
  return total;
}

}  // namespace lsm
