#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "persuasion/errors.hpp"
#include "persuasion/model.hpp"
#include "persuasion/random.hpp"

namespace persuasion {

struct RandomSpec {
  std::size_t states = 10;
  std::size_t actions = 10;
  std::size_t thetas = 10;
  std::size_t terminals = 5;  // n*
  double beta = 0.0;
  double gamma = 0.8;
  double gamma_tilde = 0.8;
  std::uint64_t seed = 0;
};

struct RoadNavSpec {
  std::size_t nodes = 20;
  std::size_t edges = 100;
  std::size_t thetas = 3;
  double beta = 0.5;
  double gamma = 0.8;
  double gamma_tilde = 0.8;
  bool uniform_congestion = false;
  std::uint64_t seed = 0;
};

// Undirected simple graph; edges stored with u < v, sorted.
struct Graph {
  std::size_t vertices = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  bool adjacent(std::size_t u, std::size_t v) const {
    const auto e = std::minmax(u, v);
    return std::binary_search(edges.begin(), edges.end(), std::pair{e.first, e.second});
  }
};

// Validates and canonicalizes an edge list.
inline Graph make_graph(std::size_t vertices, std::vector<std::pair<std::size_t, std::size_t>> edges) {
  Graph g{vertices, {}};
  for (auto [u, v] : edges) {
    if (u >= vertices || v >= vertices)
      throw InvalidSpec("edge {" + std::to_string(u) + "," + std::to_string(v) + "} names a missing vertex");
    if (u == v) throw InvalidSpec("self-loop at vertex " + std::to_string(u));
    g.edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(g.edges.begin(), g.edges.end());
  if (std::adjacent_find(g.edges.begin(), g.edges.end()) != g.edges.end())
    throw InvalidSpec("duplicate edge in graph");
  return g;
}

// Edge-list text: first line "n m", then m lines "u v" (0-based).
inline Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return;
    }
    throw ParseError(std::string("unexpected end of graph file, expected ") + what, lineno + 1, 1);
  };
  auto read_pair = [&](const char* what) {
    next_line(what);
    std::istringstream ls(line);
    long long a = -1, b = -1;
    std::string rest;
    if (!(ls >> a >> b) || (ls >> rest) || a < 0 || b < 0)
      throw ParseError("line " + std::to_string(lineno) + ": expected " + what, lineno, 1);
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  };
  const auto [n, m] = read_pair("\"n m\"");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < m; ++i) edges.push_back(read_pair("\"u v\""));
  return make_graph(n, std::move(edges));
}

namespace detail {

inline void check_discounts(double gamma, double gamma_tilde) {
  if (!(gamma >= 0.0 && gamma < 1.0) || !(gamma_tilde >= 0.0 && gamma_tilde < 1.0))
    throw InvalidSpec("discount factors must lie in [0, 1)");
}

inline void normalize(std::span<double> row) {
  double sum = 0.0;
  for (double x : row) sum += x;
  if (sum <= 0.0) {
    for (double& x : row) x = 1.0 / static_cast<double>(row.size());
    return;
  }
  for (double& x : row) x /= sum;
}

inline std::vector<std::string> names(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline void tune(RewardTable& agent, const RewardTable& principal, double beta) {
  for (std::size_t i = 0; i < agent.dim0(); ++i)
    for (std::size_t j = 0; j < agent.dim1(); ++j)
      for (std::size_t k = 0; k < agent.dim2(); ++k)
        agent(i, j, k) = (1.0 - std::abs(beta)) * agent(i, j, k) + beta * principal(i, j, k);
}

}  // namespace detail

// Random instance. Draw order from SplitMix64(seed): transition entries in
// [s][a][s'] order, z, principal rewards [s][theta][a], agent rewards, priors
// [s][theta], then n* terminal states by a partial Fisher-Yates shuffle.
inline PersuasionMDP gen_random(const RandomSpec& spec) {
  if (spec.states == 0 || spec.actions == 0 || spec.thetas == 0)
    throw InvalidSpec("state, action and theta counts must be positive");
  if (spec.terminals >= spec.states) throw InvalidSpec("n* must be smaller than the state count");
  if (!(spec.beta >= -1.0 && spec.beta <= 1.0)) throw InvalidSpec("beta must lie in [-1, 1]");
  detail::check_discounts(spec.gamma, spec.gamma_tilde);
  const std::size_t S = spec.states, A = spec.actions, T = spec.thetas;
  SplitMix64 rng(spec.seed);

  MdpData d;
  d.state_names = detail::names("s", S);
  d.action_names = detail::names("a", A);
  d.theta_names = detail::names("t", T);
  d.transition = Array3(S, A, S);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t n = 0; n < S; ++n) d.transition(s, a, n) = rng.uniform();
      detail::normalize(d.transition.row(s, a));
    }
  d.init_dist.resize(S);
  for (double& x : d.init_dist) x = rng.uniform();
  detail::normalize(d.init_dist);
  d.principal_reward = Array3(S, T, A);
  d.agent_reward = Array3(S, T, A);
  for (auto* r : {&d.principal_reward, &d.agent_reward})
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t a = 0; a < A; ++a) (*r)(s, t, a) = rng.uniform();
  detail::tune(d.agent_reward, d.principal_reward, spec.beta);
  d.prior = Array2(S, T);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t t = 0; t < T; ++t) d.prior(s, t) = rng.uniform();
    detail::normalize(d.prior.row(s));
  }
  std::vector<std::size_t> order(S);
  for (std::size_t i = 0; i < S; ++i) order[i] = i;
  d.terminal.assign(S, false);
  for (std::size_t i = 0; i < spec.terminals; ++i) {
    const auto j = i + rng.below(S - i);
    std::swap(order[i], order[j]);
    d.terminal[order[i]] = true;
  }
  d.available.assign(S, {});
  for (std::size_t s = 0; s < S; ++s)
    if (!d.terminal[s])
      for (std::size_t a = 0; a < A; ++a) d.available[s].push_back(a);
  d.gamma = spec.gamma;
  d.gamma_tilde = spec.gamma_tilde;
  return PersuasionMDP(std::move(d));
}

// Directed acyclic road network with edges u -> v, u < v, in BFS index order.
struct RoadNetwork {
  std::size_t nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // sorted
};

// Tree from a uniform Pruefer sequence, nodes renumbered by BFS from vertex 0
// (neighbours in increasing label order), then random forward edges until at
// least m, then an edge to the destination from every other dead end.
inline RoadNetwork road_network(std::size_t n, std::size_t m, SplitMix64& rng) {
  RoadNetwork net{n, {}};
  if (n == 1) return net;
  std::vector<std::vector<std::size_t>> adj(n);
  if (n == 2) {
    adj[0].push_back(1);
    adj[1].push_back(0);
  } else {
    std::vector<std::size_t> seq(n - 2), degree(n, 1);
    for (auto& x : seq) {
      x = static_cast<std::size_t>(rng.below(n));
      ++degree[x];
    }
    for (std::size_t x : seq) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      adj[leaf].push_back(x);
      adj[x].push_back(leaf);
      --degree[leaf];
      --degree[x];
    }
    std::size_t u = n, v = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] != 1) continue;
      (u == n ? u : v) = i;
    }
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<std::size_t> index(n, n);
  std::deque<std::size_t> queue{0};
  index[0] = 0;
  std::size_t next = 1;
  while (!queue.empty()) {
    const auto x = queue.front();
    queue.pop_front();
    auto nb = adj[x];
    std::sort(nb.begin(), nb.end());
    for (auto y : nb) {
      if (index[y] != n) continue;
      index[y] = next++;
      queue.push_back(y);
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t x = 0; x < n; ++x)
    for (auto y : adj[x])
      if (index[x] < index[y]) edges.emplace(index[x], index[y]);
  while (edges.size() < m) {
    const auto a = static_cast<std::size_t>(rng.below(n));
    const auto b = static_cast<std::size_t>(rng.below(n));
    if (a == b) continue;
    edges.emplace(std::min(a, b), std::max(a, b));
  }
  std::vector<bool> has_out(n, false);
  for (auto [a, b] : edges) has_out[a] = true;
  for (std::size_t x = 0; x + 1 < n; ++x)
    if (!has_out[x]) edges.emplace(x, n - 1);
  net.edges.assign(edges.begin(), edges.end());
  return net;
}

// Road navigation: state = node, action v = "drive to node v", start 0,
// destination n-1 (terminal). Draw order after the network: for each edge in
// sorted order, the principal cost then the agent's per-theta costs. Rewards
// are negated costs; the agent's are then tuned by beta.
inline PersuasionMDP gen_roadnav(const RoadNavSpec& spec) {
  const std::size_t n = spec.nodes;
  if (n < 2) throw InvalidSpec("road network needs at least two nodes");
  if (spec.edges + 1 < n || spec.edges > n * (n - 1) / 2)
    throw InvalidSpec("edge count must lie in [n-1, n(n-1)/2]");
  if (spec.thetas == 0) throw InvalidSpec("theta count must be positive");
  if (!(spec.beta >= -1.0 && spec.beta <= 1.0)) throw InvalidSpec("beta must lie in [-1, 1]");
  detail::check_discounts(spec.gamma, spec.gamma_tilde);
  SplitMix64 rng(spec.seed);
  const auto net = road_network(n, spec.edges, rng);
  const std::size_t T = spec.thetas;

  MdpData d;
  d.state_names = detail::names("n", n);
  d.action_names = detail::names("to", n);
  d.theta_names = detail::names("t", T);
  d.terminal.assign(n, false);
  d.terminal[n - 1] = true;
  d.available.assign(n, {});
  d.transition = Array3(n, n, n);
  d.principal_reward = Array3(n, T, n);
  d.agent_reward = Array3(n, T, n);
  std::vector<double> costs(T);
  for (auto [u, v] : net.edges) {
    d.available[u].push_back(v);
    d.transition(u, v, v) = 1.0;
    const double principal = rng.uniform();
    for (auto& c : costs) c = rng.uniform();
    if (spec.uniform_congestion) std::sort(costs.begin(), costs.end());
    for (std::size_t t = 0; t < T; ++t) {
      d.principal_reward(u, t, v) = -principal;
      d.agent_reward(u, t, v) = -costs[t];
    }
  }
  detail::tune(d.agent_reward, d.principal_reward, spec.beta);
  d.prior = Array2(n, T, 1.0 / static_cast<double>(T));
  d.init_dist.assign(n, 0.0);
  d.init_dist[0] = 1.0;
  d.gamma = spec.gamma;
  d.gamma_tilde = spec.gamma_tilde;
  return PersuasionMDP(std::move(d));
}

// State layout of the independent-set gadget.
struct GadgetMap {
  std::size_t vertices = 0;
  static constexpr ActionIndex kA = 0;
  static constexpr ActionIndex kB = 1;
  static constexpr ThetaIndex kThetaA = 0;
  static constexpr ThetaIndex kThetaB = 1;

  StateIndex entry(std::size_t v) const { return 3 * v; }         // s_v
  StateIndex choice(std::size_t v) const { return 3 * v + 1; }    // s'_v
  StateIndex exit(std::size_t v) const { return 3 * v + 2; }      // s''_v
  StateIndex terminal() const { return 3 * vertices; }            // s_X
  ActionIndex move_to(std::size_t u) const { return 2 + u; }      // a_{v,u}: s''_v -> s'_u
};

struct Gadget {
  PersuasionMDP mdp;
  GadgetMap map;
  Graph graph;
};

// MDP of the max-independent-set reduction. From s_v: a pays gamma~ and ends,
// b moves to s'_v. At s'_v both a and b move to s''_v paying rho(action,
// theta) = +1 on a match and -1 otherwise. From s''_v: b pays gamma~^2 (and
// the principal 1) and ends, a_{v,u} moves to s'_u for each neighbour u.
inline Gadget gen_indset_gadget(const Graph& graph, double gamma_tilde, double gamma) {
  if (!(gamma_tilde < 0.5)) throw DiscountOutOfRange("the gadget requires gamma~ < 1/2");
  detail::check_discounts(gamma, gamma_tilde);
  const std::size_t m = graph.vertices;
  if (m == 0) throw InvalidSpec("graph has no vertices");
  GadgetMap map{m};
  const std::size_t S = 3 * m + 1, A = 2 + m;
  const double gt = gamma_tilde;

  MdpData d;
  for (std::size_t v = 0; v < m; ++v) {
    const auto vs = std::to_string(v);
    d.state_names.insert(d.state_names.end(), {"s_" + vs, "s'_" + vs, "s''_" + vs});
  }
  d.state_names.push_back("s_X");
  d.action_names = {"a", "b"};
  for (std::size_t u = 0; u < m; ++u) d.action_names.push_back("to_" + std::to_string(u));
  d.theta_names = {"theta_a", "theta_b"};
  d.terminal.assign(S, false);
  d.terminal[map.terminal()] = true;
  d.available.assign(S, {});
  d.transition = Array3(S, A, S);
  d.principal_reward = Array3(S, 2, A);
  d.agent_reward = Array3(S, 2, A);
  d.prior = Array2(S, 2);
  for (StateIndex s = 0; s < S; ++s) d.prior(s, GadgetMap::kThetaA) = 1.0;

  const auto X = map.terminal();
  for (std::size_t v = 0; v < m; ++v) {
    const auto sv = map.entry(v), sp = map.choice(v), spp = map.exit(v);
    d.available[sv] = {GadgetMap::kA, GadgetMap::kB};
    d.transition(sv, GadgetMap::kA, X) = 1.0;
    d.transition(sv, GadgetMap::kB, sp) = 1.0;
    for (ThetaIndex t = 0; t < 2; ++t) d.agent_reward(sv, t, GadgetMap::kA) = gt;

    d.available[sp] = {GadgetMap::kA, GadgetMap::kB};
    d.prior(sp, GadgetMap::kThetaA) = 0.5;
    d.prior(sp, GadgetMap::kThetaB) = 0.5;
    for (ActionIndex a : {GadgetMap::kA, GadgetMap::kB}) {
      d.transition(sp, a, spp) = 1.0;
      for (ThetaIndex t = 0; t < 2; ++t) d.agent_reward(sp, t, a) = (a == t) ? 1.0 : -1.0;
    }

    d.available[spp] = {GadgetMap::kB};
    d.transition(spp, GadgetMap::kB, X) = 1.0;
    for (ThetaIndex t = 0; t < 2; ++t) {
      d.agent_reward(spp, t, GadgetMap::kB) = gt * gt;
      d.principal_reward(spp, t, GadgetMap::kB) = 1.0;
    }
    for (std::size_t u = 0; u < m; ++u) {
      if (u == v || !graph.adjacent(u, v)) continue;
      d.available[spp].push_back(map.move_to(u));
      d.transition(spp, map.move_to(u), map.choice(u)) = 1.0;
    }
  }
  d.init_dist.assign(S, 0.0);
  for (std::size_t v = 0; v < m; ++v) d.init_dist[map.entry(v)] = 1.0 / static_cast<double>(m);
  d.gamma = gamma;
  d.gamma_tilde = gamma_tilde;
  return Gadget{PersuasionMDP(std::move(d)), map, graph};
}

// Advice that reveals theta at s'_v for v in the set (advising the matching
// rho action) and elsewhere always recommends the first available action.
inline ActionAdvice indset_strategy(const Gadget& gadget, const std::vector<std::size_t>& independent_set) {
  const auto& mdp = gadget.mdp;
  const auto& map = gadget.map;
  std::vector<bool> chosen(map.vertices, false);
  for (auto v : independent_set) {
    if (v >= map.vertices) throw InvalidSpec("vertex " + std::to_string(v) + " is not in the graph");
    chosen[v] = true;
  }
  for (auto [u, v] : gadget.graph.edges)
    if (chosen[u] && chosen[v])
      throw NotIndependent("vertices " + std::to_string(u) + " and " + std::to_string(v) + " are adjacent");

  Array3 pi(mdp.num_states(), mdp.num_thetas(), mdp.num_actions());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ThetaIndex t = 0; t < mdp.num_thetas(); ++t) pi(s, t, mdp.available(s).front()) = 1.0;
  }
  for (std::size_t v = 0; v < map.vertices; ++v) {
    if (!chosen[v]) continue;
    const auto sp = map.choice(v);
    for (ThetaIndex t = 0; t < 2; ++t) {
      pi(sp, t, GadgetMap::kA) = (t == GadgetMap::kThetaA) ? 1.0 : 0.0;
      pi(sp, t, GadgetMap::kB) = (t == GadgetMap::kThetaB) ? 1.0 : 0.0;
    }
  }
  return ActionAdvice(mdp, std::move(pi));
}

}  // namespace persuasion
