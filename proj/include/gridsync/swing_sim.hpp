#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridsync/grid_model.hpp"
#include "gridsync/matrix.hpp"

namespace gridsync {

// The model's published first-order form leaves the 1/M factor off the
// power-coupling term while every other right-hand term carries it.
// kConsistent divides the whole angle-rate equation by M; kUnscaledPower
// keeps the power term unscaled for side-by-side comparison. The two
// coincide at M = 1.
enum class PowerScaling { kConsistent, kUnscaledPower };

enum class SimMode { kLinearized, kNonlinear };

struct Disturbance {
  int node = 0;
  double delta_xi = 0.0;
  double delta_theta = 0.0;
};

struct SimConfig {
  double dt = 1e-3;
  double t_end = 20.0;
  SimMode mode = SimMode::kLinearized;
  PowerScaling scaling = PowerScaling::kConsistent;
  std::vector<Disturbance> disturbance;  // applied to the zero state at t = 0
  int record_stride = 1;

  void validate(int n_nodes) const {
    if (!(dt > 0.0)) throw std::invalid_argument("sim config: dt must be > 0");
    if (!(t_end >= dt)) throw std::invalid_argument("sim config: t_end must be >= dt");
    if (record_stride < 1) throw std::invalid_argument("sim config: record_stride must be >= 1");
    for (const auto& d : disturbance)
      if (d.node < 0 || d.node >= n_nodes)
        throw std::invalid_argument("sim config: disturbance node " + std::to_string(d.node) +
                                    " out of range");
  }
};

// Angle deviations xi_i = delta_i - delta_0 and their rates theta_i.
struct SystemState {
  std::vector<double> xi;
  std::vector<double> theta;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SystemState> states;
  bool blew_up = false;
  double blow_up_time = std::numeric_limits<double>::quiet_NaN();
};

struct SettlingMetrics {
  bool converged = false;
  bool diverged = false;
  bool rate_applicable = false;
  double settling_time = std::numeric_limits<double>::quiet_NaN();
  double decay_rate = std::numeric_limits<double>::quiet_NaN();
  double initial_level = 0.0;
  double final_level = 0.0;
};

namespace detail {

// Lower-left coupling block of the state matrix under the chosen scaling.
inline SymMatrix coupling_block(const GridParams& params, const PowerNetwork& net,
                                const CommPlan& plan, PowerScaling scaling) {
  const SymMatrix lp = laplacian(net);
  const SymMatrix lc = comm_laplacian(plan, net.n_nodes);
  const double cc = params.comm_coupling();
  const double cp = scaling == PowerScaling::kConsistent
                        ? params.power_coupling() / params.M
                        : params.power_coupling();
  const std::size_t n = lp.order();
  SymMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a.set(i, j, cc * lc(i, j) + cp * lp(i, j));
  return a;
}

}  // namespace detail

// State matrix of the first-order form: top-right block the identity (angle
// rows feed theta), lower-left the coupling block, lower-right the damping
// -(D/M) I. With kUnscaledPower the coupling block equals the combined matrix
// c_c L_c + c_p L_p exactly.
inline DenseMatrix assemble_state_matrix(const GridParams& params, const PowerNetwork& net,
                                         const CommPlan& plan,
                                         PowerScaling scaling = PowerScaling::kConsistent) {
  params.validate();
  const int n = net.n_nodes;
  for (int node : plan.connected)
    if (node < 0 || node >= n)
      throw std::invalid_argument("assemble_state_matrix: plan node out of range");
  const SymMatrix block = detail::coupling_block(params, net, plan, scaling);
  const double damping = -params.D / params.M;
  DenseMatrix f(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    f(i, n + i) = 1.0;
    for (int j = 0; j < n; ++j) f(n + i, j) = block(i, j);
    f(n + i, n + i) = damping;
  }
  return f;
}

// Exact electric power at one node per the sin/cos line-flow form:
// P_e = (V^2/|Z|^2) [ R (N_i - sum cos(d_i - d_k)) - X sum sin(d_i - d_k) ] + V^2 Re[Y].
inline double electric_power_exact(const SystemState& state, const PowerNetwork& net,
                                   const GridParams& params, int node) {
  if (node < 0 || node >= net.n_nodes)
    throw std::invalid_argument("electric_power_exact: node out of range");
  double cos_sum = 0.0, sin_sum = 0.0;
  int neighbors = 0;
  for (const auto& [a, b] : net.edges) {
    if (a != node && b != node) continue;
    const int other = (a == node) ? b : a;
    const double diff = state.xi[node] - state.xi[other];
    cos_sum += std::cos(diff);
    sin_sum += std::sin(diff);
    ++neighbors;
  }
  const double v2 = params.V * params.V;
  return v2 / params.z_squared() * (params.R * (neighbors - cos_sum) - params.X * sin_sum) +
         v2 * params.Y_re;
}

// Fixed-step classical RK4 integration of the communication-controlled swing
// dynamics. A non-finite state ends the run early with the blow-up time
// recorded; that is the expected outcome for unstable configurations.
inline Trajectory simulate(const PowerNetwork& net, const CommPlan& plan, const GridParams& params,
                           const SimConfig& sim) {
  params.validate();
  sim.validate(net.n_nodes);
  for (int node : plan.connected)
    if (node < 0 || node >= net.n_nodes)
      throw std::invalid_argument("simulate: plan node out of range");

  const int n = net.n_nodes;
  const double inv_m = 1.0 / params.M;
  const double damp = params.D / params.M;
  const double cc = params.comm_coupling();
  const double cp_lin = sim.scaling == PowerScaling::kConsistent
                            ? params.power_coupling() * inv_m
                            : params.power_coupling();
  const double power_scale = sim.scaling == PowerScaling::kConsistent ? inv_m : 1.0;
  const double v2_over_z2 = params.V * params.V / params.z_squared();
  const auto& conn = plan.connected;
  const int k = static_cast<int>(conn.size());

  // flat state: x[0..n) = xi, x[n..2n) = theta
  std::vector<double> x(2 * n, 0.0);
  for (const auto& d : sim.disturbance) {
    x[d.node] += d.delta_xi;
    x[n + d.node] += d.delta_theta;
  }

  auto deriv = [&](const std::vector<double>& s, std::vector<double>& out) {
    for (int i = 0; i < n; ++i) out[i] = s[n + i];
    // communication control: (h/M) * sum_{j |> i} (xi_i - xi_j) over the clique
    double comm_sum = 0.0;
    for (int u : conn) comm_sum += s[u];
    for (int i = 0; i < n; ++i) out[n + i] = -damp * s[n + i];
    if (k >= 2)
      for (int u : conn) out[n + u] += cc * (k * s[u] - comm_sum);
    if (sim.mode == SimMode::kLinearized) {
      // + c_p (L_p xi)_i, scaled per convention
      for (const auto& [a, b] : net.edges) {
        const double diff = s[a] - s[b];
        out[n + a] += cp_lin * diff;
        out[n + b] -= cp_lin * diff;
      }
    } else {
      // exact power coupling -(P_e - V^2 Re[Y]) via the sin/cos line flow
      for (const auto& [a, b] : net.edges) {
        const double diff = s[a] - s[b];
        const double sin_d = std::sin(diff);
        const double one_minus_cos = 1.0 - std::cos(diff);
        // node a sees (xi_a - xi_b), node b the negation; cos is even
        out[n + a] += power_scale * v2_over_z2 * (params.X * sin_d - params.R * one_minus_cos);
        out[n + b] += power_scale * v2_over_z2 * (-params.X * sin_d - params.R * one_minus_cos);
      }
    }
  };

  const long long steps = std::llround(sim.t_end / sim.dt);
  Trajectory traj;
  traj.times.reserve(steps / sim.record_stride + 2);

  auto record = [&](long long step_idx) {
    SystemState st;
    st.xi.assign(x.begin(), x.begin() + n);
    st.theta.assign(x.begin() + n, x.end());
    traj.times.push_back(step_idx * sim.dt);
    traj.states.push_back(std::move(st));
  };
  record(0);

  std::vector<double> k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), tmp(2 * n);
  const double dt = sim.dt;
  for (long long s = 0; s < steps; ++s) {
    deriv(x, k1);
    for (int i = 0; i < 2 * n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    deriv(tmp, k2);
    for (int i = 0; i < 2 * n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    deriv(tmp, k3);
    for (int i = 0; i < 2 * n; ++i) tmp[i] = x[i] + dt * k3[i];
    deriv(tmp, k4);
    bool finite = true;
    for (int i = 0; i < 2 * n; ++i) {
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      finite = finite && std::isfinite(x[i]);
    }
    if (!finite) {
      traj.blew_up = true;
      traj.blow_up_time = (s + 1) * dt;
      break;
    }
    if ((s + 1) % sim.record_stride == 0 || s + 1 == steps) record(s + 1);
  }
  return traj;
}

// Disagreement-plus-rate level s(t) = ||xi - mean(xi) 1||_2 + ||theta||_2,
// which quotients out the rigid-body angle shift. Converged means the final
// level fell below tol * initial; diverged means a blow-up or growth past
// 10x the initial level. The decay rate is the least-squares slope of
// log s(t) over the final half of the horizon.
inline SettlingMetrics settling_metrics(const Trajectory& traj, double tol) {
  if (traj.states.empty()) throw std::invalid_argument("settling_metrics: empty trajectory");
  const std::size_t m = traj.states.size();
  std::vector<double> level(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto& st = traj.states[s];
    const std::size_t n = st.xi.size();
    double mean = 0.0;
    for (double v : st.xi) mean += v;
    mean /= static_cast<double>(n);
    double dsq = 0.0;
    for (double v : st.xi) dsq += (v - mean) * (v - mean);
    double tsq = 0.0;
    for (double v : st.theta) tsq += v * v;
    level[s] = std::sqrt(dsq) + std::sqrt(tsq);
  }

  SettlingMetrics out;
  out.initial_level = level.front();
  out.final_level = level.back();
  if (out.initial_level == 0.0) {
    // zero initial disturbance: equilibrium; a decay rate is not applicable
    out.converged = !traj.blew_up;
    out.settling_time = traj.times.front();
    return out;
  }
  out.converged = !traj.blew_up && out.final_level < tol * out.initial_level;
  out.diverged = traj.blew_up || out.final_level > 10.0 * out.initial_level;

  const double cutoff = tol * out.initial_level;
  std::size_t first_settled = m;  // smallest index from which all levels stay below cutoff
  for (std::size_t s = m; s-- > 0;) {
    if (level[s] >= cutoff) break;
    first_settled = s;
  }
  if (first_settled < m) out.settling_time = traj.times[first_settled];

  const double t_mid = traj.times.front() + 0.5 * (traj.times.back() - traj.times.front());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t s = 0; s < m; ++s) {
    if (traj.times[s] < t_mid || level[s] <= 0.0) continue;
    const double lx = traj.times[s];
    const double ly = std::log(level[s]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  const double denom = cnt * sxx - sx * sx;
  if (cnt >= 2 && denom > 0.0) {
    out.decay_rate = (cnt * sxy - sx * sy) / denom;
    out.rate_applicable = true;
  }
  return out;
}

// Tabular trajectory export: header then one row per recorded sample,
// columns t, xi_0..xi_{N-1}, theta_0..theta_{N-1}, 17 significant digits.
inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const std::size_t n = traj.states.front().xi.size();
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",xi_" << i;
  for (std::size_t i = 0; i < n; ++i) os << ",theta_" << i;
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    put(traj.times[s]);
    for (std::size_t i = 0; i < n; ++i) {
      os << ",";
      put(traj.states[s].xi[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      os << ",";
      put(traj.states[s].theta[i]);
    }
    os << "\n";
  }
}

}  // namespace gridsync
