#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridsync/grid_model.hpp"
#include "gridsync/rng.hpp"
#include "gridsync/spectral.hpp"

namespace gridsync {

// Ant Colony System parameters. Defaults follow the reference experiment:
// 30 iterations, 15 ants, gamma=10, rho=0.9, Q=0.9, alpha=beta=2.
struct ACSConfig {
  int n_ants = 15;
  int n_iterations = 30;
  double gamma = 10.0;      // pheromone award constant, > 1
  double rho = 0.9;         // evaporation, in (0,1)
  double q_threshold = 0.9; // exploitation threshold Q, in [0,1]
  double alpha = 2.0;       // pheromone exponent
  double beta = 2.0;        // cost exponent
  double tau0 = 1.0;        // initial pheromone, > 0
  std::uint64_t seed = 1;
  // Exploitation branch direction. The default takes the argmax only when
  // the drawn q exceeds Q (so Q = 0.9 exploits 10% of steps). Classic ant
  // colony system implementations exploit when q falls BELOW the threshold
  // (90% of steps at 0.9); setting this flag selects that convention, which
  // trades small-budget exploration for stronger convergence toward the
  // greedy chain on large instances.
  bool exploit_on_low_q = false;

  void validate() const {
    if (n_ants < 1) throw std::invalid_argument("acs config: n_ants must be >= 1");
    if (n_iterations < 1) throw std::invalid_argument("acs config: n_iterations must be >= 1");
    if (!(gamma > 1.0)) throw std::invalid_argument("acs config: gamma must be > 1");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("acs config: rho must be in (0,1)");
    if (!(q_threshold >= 0.0 && q_threshold <= 1.0))
      throw std::invalid_argument("acs config: q_threshold must be in [0,1]");
    if (!(tau0 > 0.0)) throw std::invalid_argument("acs config: tau0 must be > 0");
  }
};

// One pheromone intensity per candidate link (center -> generator i).
struct PheromoneTable {
  std::vector<double> tau;
};

struct AntState {
  std::vector<int> selected;  // chosen generators, in selection order
  std::vector<char> tabu;     // tabu[i] != 0 forbids candidate i
  bool alive = true;
};

struct PlanResult {
  CommPlan plan;
  double lambda_max = 0.0;
  std::vector<double> best_so_far_trace;  // per iteration (ACS) or per step (greedy)
  std::vector<double> avg_cost_trace;     // per-iteration normalized mean shifted cost (ACS)
  std::vector<double> mean_cost_trace;    // the same means before normalization (shared scale)
  CommPlan pheromone_argmax_plan;         // top-K pheromone plan (ACS only)
  long long evaluations = 0;              // lambda_max computations requested
  double wall_ms = 0.0;
};

// lambda_max can reach 0 or below once communication dominates, while the
// transition rule and the pheromone award both need strictly positive costs.
// Every probability and award therefore uses the shifted cost
//   g = rho_cost - c_c * n_nodes + epsilon,
// where c_c * n_nodes is a Weyl lower bound on any reachable eigenvalue.
inline constexpr double kCostShiftEpsilon = 1e-6;

inline double cost_shift(const GridParams& params, int n_nodes) {
  return -params.comm_coupling() * n_nodes + kCostShiftEpsilon;
}

namespace detail {

// Workspace-reusing lambda_max evaluator over communication sets. The base
// matrix c_p * L_p is built once; each query copies it, overlays the clique
// term and runs the tridiagonal fast path. Results are memoized by set
// bitmask while the node count fits in 64 bits. Sets of size <= 1 induce no
// communication edges and short-circuit to the empty-plan value.
class PlanCostEvaluator {
 public:
  PlanCostEvaluator(const PowerNetwork& net, const GridParams& params)
      : n_(net.n_nodes), cc_(params.comm_coupling()) {
    if (n_ <= 0) throw std::invalid_argument("plan evaluator: empty network");
    params.validate();
    const double cp = params.power_coupling();
    base_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    for (const auto& [a, b] : net.edges) {
      base_[a * n_ + b] -= cp;
      base_[b * n_ + a] -= cp;
      base_[a * n_ + a] += cp;
      base_[b * n_ + b] += cp;
    }
    work_.resize(base_.size());
    d_.resize(n_);
    e_.resize(n_);
    hv_.resize(n_);
    hw_.resize(n_);
    std::memcpy(work_.data(), base_.data(), base_.size() * sizeof(double));
    base_lambda_ = largest_of_work();
  }

  int n_nodes() const { return n_; }
  double base_lambda() const { return base_lambda_; }
  long long requests() const { return requests_; }

  // lambda_max of the combined matrix for the communication set `s`.
  double lambda_of_set(const std::vector<int>& s) {
    ++requests_;
    const int k = static_cast<int>(s.size());
    if (k <= 1) return base_lambda_;
    if (n_ <= 64) {
      std::uint64_t mask = 0;
      for (int i : s) mask |= std::uint64_t{1} << i;
      auto it = memo_.find(mask);
      if (it != memo_.end()) return it->second;
      const double v = compute(s);
      memo_.emplace(mask, v);
      return v;
    }
    return compute(s);
  }

  // lambda_max of the set `partial` extended by `candidate`.
  double lambda_of_extension(const std::vector<int>& partial, int candidate) {
    scratch_ = partial;
    scratch_.push_back(candidate);
    return lambda_of_set(scratch_);
  }

 private:
  double compute(const std::vector<int>& s) {
    std::memcpy(work_.data(), base_.data(), base_.size() * sizeof(double));
    const int k = static_cast<int>(s.size());
    for (int a : s) work_[a * n_ + a] += cc_ * (k - 1);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        work_[s[i] * n_ + s[j]] -= cc_;
        work_[s[j] * n_ + s[i]] -= cc_;
      }
    return largest_of_work();
  }

  double largest_of_work() {
    if (n_ == 1) return work_[0];
    spectral_detail_tridiag();
    return gridsync::detail::tridiag_largest(d_.data(), e_.data(), n_, esq_);
  }

  void spectral_detail_tridiag() {
    gridsync::detail::tridiagonalize_lower(work_.data(), static_cast<std::size_t>(n_), d_.data(),
                                           e_.data(), hv_.data(), hw_.data());
  }

  int n_;
  double cc_;
  double base_lambda_ = 0.0;
  long long requests_ = 0;
  std::vector<double> base_, work_, d_, e_, hv_, hw_, esq_;
  std::vector<int> scratch_;
  std::unordered_map<std::uint64_t, double> memo_;
};

inline void check_budget(int k_links, int n_nodes) {
  if (k_links < 0 || k_links > n_nodes)
    throw std::invalid_argument("link budget K=" + std::to_string(k_links) +
                                " out of range [0, " + std::to_string(n_nodes) + "]");
}

inline CommPlan plan_from_set(std::vector<int> s, int n_nodes) {
  std::sort(s.begin(), s.end());
  return CommPlan::of(std::move(s), n_nodes);
}

// Greedy argmin tie window: candidates within 1e-12 relative of the incumbent
// count as ties and keep the lower index, so floating-point noise cannot
// break a symmetry tie away from the documented rule. The window sits two
// orders above the eigensolver's observed cross-path noise (~5e-13) and well
// below any genuine candidate separation.
inline bool strictly_better(double candidate, double incumbent) {
  return candidate < incumbent - 1e-12 * std::max(1.0, std::fabs(incumbent));
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Cost of adding `candidate` to `partial`: lambda_max of the combined matrix
// with the clique on partial + {candidate}. Pure; with an empty partial every
// candidate ties at the empty-plan value (a 1-clique has no edges).
inline double edge_cost(const PowerNetwork& net, const GridParams& params, const CommPlan& partial,
                        int candidate) {
  if (candidate < 0 || candidate >= net.n_nodes)
    throw std::invalid_argument("edge_cost: candidate out of range");
  if (partial.contains(candidate))
    throw std::invalid_argument("edge_cost: candidate " + std::to_string(candidate) +
                                " already selected");
  detail::PlanCostEvaluator ev(net, params);
  return ev.lambda_of_extension(partial.connected, candidate);
}

// Transition distribution over non-tabu candidates:
//   p_i = tau_i^alpha * g_i^(-beta) / sum over non-tabu,
// with shifted costs g_i > 0. Tabu entries get probability zero. Throws when
// every candidate is tabu (a blocked ant).
inline std::vector<double> transition_probabilities(const PheromoneTable& pheromone,
                                                    const std::vector<double>& shifted_costs,
                                                    const ACSConfig& cfg,
                                                    const std::vector<char>& tabu) {
  const std::size_t n = pheromone.tau.size();
  if (shifted_costs.size() != n || tabu.size() != n)
    throw std::invalid_argument("transition_probabilities: size mismatch");
  std::vector<double> p(n, 0.0);
  double total = 0.0;
  std::size_t open = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (tabu[i]) continue;
    ++open;
    if (!(shifted_costs[i] > 0.0))
      throw std::invalid_argument("transition_probabilities: non-positive shifted cost at " +
                                  std::to_string(i));
    if (!(pheromone.tau[i] > 0.0))
      throw std::invalid_argument("transition_probabilities: non-positive pheromone at " +
                                  std::to_string(i));
    p[i] = std::pow(pheromone.tau[i], cfg.alpha) * std::pow(shifted_costs[i], -cfg.beta);
    total += p[i];
  }
  if (open == 0) throw std::runtime_error("transition_probabilities: all candidates tabu");
  if (total > 0.0) {
    for (std::size_t i = 0; i < n; ++i) p[i] /= total;
  } else {
    // full underflow of every weight; fall back to uniform over the open set
    for (std::size_t i = 0; i < n; ++i)
      if (!tabu[i]) p[i] = 1.0 / static_cast<double>(open);
  }
  return p;
}

// Edge selection: draw q uniform in [0,1); q > Q exploits (argmax
// probability, ties to the lowest index), otherwise roulette wheel on the
// distribution. With exploit_on_low_q the comparison inverts to the classic
// convention. Consumes one rng draw, plus one more on the roulette branch.
inline int select_edge(const std::vector<double>& probabilities, const ACSConfig& cfg,
                       SplitMix64& rng) {
  int last_open = -1;
  for (std::size_t i = 0; i < probabilities.size(); ++i)
    if (probabilities[i] > 0.0) last_open = static_cast<int>(i);
  if (last_open < 0) throw std::invalid_argument("select_edge: empty candidate set");

  const double q = rng.next_double();
  const bool exploit = cfg.exploit_on_low_q ? (q < cfg.q_threshold) : (q > cfg.q_threshold);
  if (exploit) {
    int best = -1;
    double bp = -1.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i)
      if (probabilities[i] > bp) {
        bp = probabilities[i];
        best = static_cast<int>(i);
      }
    return best;
  }
  const double r = rng.next_double();
  double cum = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cum += probabilities[i];
    if (probabilities[i] > 0.0 && r < cum) return static_cast<int>(i);
  }
  return last_open;  // guards against cum < 1 from rounding
}

// Local award: the chosen edge gains gamma / g, so cheaper edges gain
// more. g is the shifted cost observed when the edge was chosen.
inline void local_pheromone_update(PheromoneTable& pheromone, int chosen, double shifted_cost,
                                   const ACSConfig& cfg) {
  if (!(shifted_cost > 0.0))
    throw std::invalid_argument("local_pheromone_update: shifted cost must be > 0");
  pheromone.tau.at(chosen) += cfg.gamma / shifted_cost;
}

// Global evaporation: every entry decays by rho once per iteration.
inline void global_pheromone_update(PheromoneTable& pheromone, const ACSConfig& cfg) {
  for (double& t : pheromone.tau) t *= cfg.rho;
}

// The ACS planner. Each iteration sends the ants out; an ant builds a
// K-subset by repeated cost evaluation, transition-probability construction
// and edge selection. Local pheromone awards for every edge chosen in the
// iteration land together once the iteration's ants are done (each award
// uses the shifted cost observed when its edge was chosen), then one global
// evaporation closes the iteration. Awarding per iteration rather than per
// ant keeps the early colony exploring; awarding inside the ant loop lets
// the first iteration's reinforcement cascade collapse the sampled support
// before rarely-chosen subsets are ever visited. The returned plan is the
// better of the pheromone-argmax plan and the best plan visited; both
// are reported. Fully reproducible from the seed.
inline PlanResult acs_plan(const PowerNetwork& net, const GridParams& params, int k_links,
                           const ACSConfig& cfg, detail::PlanCostEvaluator& ev) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const int n = net.n_nodes;
  detail::check_budget(k_links, n);
  const long long requests_before = ev.requests();
  const double shift = cost_shift(params, n);

  PheromoneTable pheromone{std::vector<double>(n, cfg.tau0)};
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> best_set;
  std::vector<double> best_trace, iter_mean_shifted;
  best_trace.reserve(cfg.n_iterations);
  iter_mean_shifted.reserve(cfg.n_iterations);

  std::vector<double> shifted(n, 0.0);
  std::vector<std::pair<int, double>> iter_awards;
  for (int iter = 0; iter < cfg.n_iterations; ++iter) {
    double sum_shifted = 0.0;
    int completed = 0;
    iter_awards.clear();
    for (int ant = 0; ant < cfg.n_ants; ++ant) {
      SplitMix64 rng(derive_stream_seed(cfg.seed, static_cast<std::uint64_t>(iter),
                                        static_cast<std::uint64_t>(ant)));
      AntState st;
      st.tabu.assign(n, 0);
      st.selected.reserve(k_links);
      std::size_t awards_mark = iter_awards.size();
      double final_cost = ev.base_lambda();  // K = 0 ants stay at the center
      for (int step = 0; step < k_links; ++step) {
        bool any = false;
        for (int c = 0; c < n; ++c) {
          if (st.tabu[c]) {
            shifted[c] = 1.0;  // placeholder, masked by tabu
            continue;
          }
          shifted[c] = ev.lambda_of_extension(st.selected, c) + shift;
          any = true;
        }
        if (!any) {
          st.alive = false;  // blocked; possible only for K > N, which is guarded
          break;
        }
        const auto probs = transition_probabilities(pheromone, shifted, cfg, st.tabu);
        const int pick = select_edge(probs, cfg, rng);
        st.selected.push_back(pick);
        st.tabu[pick] = 1;
        iter_awards.emplace_back(pick, shifted[pick]);
        final_cost = shifted[pick] - shift;
      }
      if (!st.alive) {
        iter_awards.resize(awards_mark);  // killed ants leave no trail
        continue;
      }
      if (final_cost < best_cost) {
        best_cost = final_cost;
        best_set = st.selected;
      }
      sum_shifted += final_cost + shift;
      ++completed;
    }
    for (const auto& [node, g] : iter_awards)
      local_pheromone_update(pheromone, node, g, cfg);
    global_pheromone_update(pheromone, cfg);
    best_trace.push_back(best_cost);
    iter_mean_shifted.push_back(sum_shifted / std::max(completed, 1));
  }

  // final selection: the K links with maximum pheromone, ties to the lowest index.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (pheromone.tau[x] != pheromone.tau[y]) return pheromone.tau[x] > pheromone.tau[y];
    return x < y;
  });
  std::vector<int> pher_set(order.begin(), order.begin() + k_links);
  std::sort(pher_set.begin(), pher_set.end());
  const double pher_cost = ev.lambda_of_set(pher_set);

  const bool take_pheromone = pher_cost <= best_cost;
  std::vector<int> final_set = take_pheromone ? pher_set : best_set;
  std::sort(final_set.begin(), final_set.end());

  const double max_mean = *std::max_element(iter_mean_shifted.begin(), iter_mean_shifted.end());
  std::vector<double> avg_trace(iter_mean_shifted.size());
  for (std::size_t i = 0; i < iter_mean_shifted.size(); ++i)
    avg_trace[i] = iter_mean_shifted[i] / max_mean;

  PlanResult r;
  r.lambda_max = ev.lambda_of_set(final_set);
  r.plan = detail::plan_from_set(std::move(final_set), n);
  r.pheromone_argmax_plan = detail::plan_from_set(std::move(pher_set), n);
  r.best_so_far_trace = std::move(best_trace);
  r.avg_cost_trace = std::move(avg_trace);
  r.mean_cost_trace = std::move(iter_mean_shifted);
  r.evaluations = ev.requests() - requests_before;
  r.wall_ms = detail::elapsed_ms(t0);
  return r;
}

inline PlanResult acs_plan(const PowerNetwork& net, const GridParams& params, int k_links,
                           const ACSConfig& cfg) {
  detail::PlanCostEvaluator ev(net, params);
  return acs_plan(net, params, k_links, cfg, ev);
}

// Greedy exhaustive search: K times, add the single generator whose addition
// minimizes the exact lambda_max (ties to the lowest index). The per-step
// trace is non-increasing by eigenvalue monotonicity.
inline PlanResult greedy_exhaustive(const PowerNetwork& net, const GridParams& params,
                                    int k_links, detail::PlanCostEvaluator& ev) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = net.n_nodes;
  detail::check_budget(k_links, n);
  const long long requests_before = ev.requests();

  std::vector<int> selected;
  std::vector<char> in_set(n, 0);
  std::vector<double> trace;
  trace.reserve(k_links);
  for (int step = 0; step < k_links; ++step) {
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
      if (in_set[c]) continue;
      const double v = ev.lambda_of_extension(selected, c);
      if (best < 0 || detail::strictly_better(v, best_v)) {
        best_v = v;
        best = c;
      }
    }
    selected.push_back(best);
    in_set[best] = 1;
    trace.push_back(best_v);
  }

  PlanResult r;
  r.lambda_max = k_links > 0 ? trace.back() : ev.base_lambda();
  r.plan = detail::plan_from_set(std::move(selected), n);
  r.best_so_far_trace = std::move(trace);
  r.evaluations = ev.requests() - requests_before;
  r.wall_ms = detail::elapsed_ms(t0);
  return r;
}

inline PlanResult greedy_exhaustive(const PowerNetwork& net, const GridParams& params,
                                    int k_links) {
  detail::PlanCostEvaluator ev(net, params);
  return greedy_exhaustive(net, params, k_links, ev);
}

// Greedy Rayleigh-quotient search: candidates are scored by the first-order
// estimate v'(A + Delta)v with v the current top eigenvector, and only the
// accepted link triggers an exact eigensolve. K+1 full solves in total
// versus O(N*K) for greedy_exhaustive.
inline PlanResult greedy_rayleigh(const PowerNetwork& net, const GridParams& params, int k_links) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = net.n_nodes;
  detail::check_budget(k_links, n);
  const SymMatrix lp = laplacian(net);
  const double cc = params.comm_coupling();

  std::vector<int> selected;
  SpectralSummary cur =
      lambda_max(combined_matrix(params, lp, comm_laplacian(CommPlan{}, n)));
  long long solves = 1;
  std::vector<double> trace;
  trace.reserve(k_links);
  for (int step = 0; step < k_links; ++step) {
    int best = -1;
    double best_score = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n; ++c) {
      if (std::find(selected.begin(), selected.end(), c) != selected.end()) continue;
      // v'(A + cc*DeltaL)v = lambda_cur + cc * sum_{u in selected} (v_c - v_u)^2
      double quad = 0.0;
      for (int u : selected) {
        const double dvu = cur.top_vector[c] - cur.top_vector[u];
        quad += dvu * dvu;
      }
      const double score = cur.lambda_max + cc * quad;
      if (best < 0 || detail::strictly_better(score, best_score)) {
        best_score = score;
        best = c;
      }
    }
    selected.push_back(best);
    cur = lambda_max(
        combined_matrix(params, lp, comm_laplacian(detail::plan_from_set(selected, n), n)));
    ++solves;
    trace.push_back(cur.lambda_max);
  }

  PlanResult r;
  r.lambda_max = cur.lambda_max;  // exact: recomputed after the last acceptance
  r.plan = detail::plan_from_set(std::move(selected), n);
  r.best_so_far_trace = std::move(trace);
  r.evaluations = solves;
  r.wall_ms = detail::elapsed_ms(t0);
  return r;
}

// Uniformly random K-subset from the seeded generator (partial Fisher-Yates),
// evaluated exactly once.
inline PlanResult random_plan(const PowerNetwork& net, const GridParams& params, int k_links,
                              std::uint64_t seed, detail::PlanCostEvaluator& ev) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = net.n_nodes;
  detail::check_budget(k_links, n);
  SplitMix64 rng(seed);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < k_links; ++i) {
    const std::size_t j = i + rng.next_below(static_cast<std::size_t>(n - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> selected(perm.begin(), perm.begin() + k_links);

  PlanResult r;
  r.lambda_max = ev.lambda_of_set(selected);
  r.plan = detail::plan_from_set(std::move(selected), n);
  r.evaluations = 1;
  r.wall_ms = detail::elapsed_ms(t0);
  return r;
}

inline PlanResult random_plan(const PowerNetwork& net, const GridParams& params, int k_links,
                              std::uint64_t seed) {
  detail::PlanCostEvaluator ev(net, params);
  return random_plan(net, params, k_links, seed, ev);
}

// Exact minimizer over all K-subsets, in lexicographic order so ties resolve
// to the lexicographically smallest subset. Guarded to C(n, K) <= 1e6.
inline PlanResult brute_force_optimal(const PowerNetwork& net, const GridParams& params,
                                      int k_links) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = net.n_nodes;
  detail::check_budget(k_links, n);
  double combos = 1.0;
  for (int i = 0; i < k_links; ++i) combos = combos * (n - i) / (i + 1);
  if (combos > 1e6)
    throw std::runtime_error("brute_force_optimal: instance too large (C(" + std::to_string(n) +
                             "," + std::to_string(k_links) + ") > 1e6)");

  detail::PlanCostEvaluator ev(net, params);
  std::vector<int> idx(k_links);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> best_set = idx;
  double best_v = std::numeric_limits<double>::infinity();
  long long count = 0;
  while (true) {
    const double v = ev.lambda_of_set(idx);
    ++count;
    if (v < best_v) {
      best_v = v;
      best_set = idx;
    }
    // next lexicographic k-combination of {0..n-1}
    int i = k_links - 1;
    while (i >= 0 && idx[i] == n - k_links + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k_links; ++j) idx[j] = idx[j - 1] + 1;
  }

  PlanResult r;
  r.lambda_max = best_v;
  r.plan = detail::plan_from_set(std::move(best_set), n);
  r.evaluations = count;
  r.wall_ms = detail::elapsed_ms(t0);
  return r;
}

}  // namespace gridsync
