#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridsync/matrix.hpp"

namespace gridsync {

// Physical constants of the (homogeneous) generator/line model plus the two
// derived coupling coefficients. All values are per-unit.
struct GridParams {
  double M = 1.0;      // rotor inertia, > 0
  double D = 1.0;      // mechanical damping, > 0
  double h = -1.0;     // mechanical-power feedback slope, < 0
  double V = 1.0;      // generator voltage magnitude, > 0
  double R = 0.01;     // line resistance, >= 0
  double X = 0.1;      // line reactance, > 0
  double Y_re = 0.0;   // real part of the shunt admittance

  double z_squared() const { return R * R + X * X; }

  // c_p = V^2 X / |Z|^2, the power-coupling coefficient; > 0.
  double power_coupling() const { return V * V * X / z_squared(); }

  // c_c = h / M, the communication-coupling coefficient; < 0.
  double comm_coupling() const { return h / M; }

  void validate() const {
    if (!(M > 0.0)) throw std::invalid_argument("GridParams: M must be > 0");
    if (!(D > 0.0)) throw std::invalid_argument("GridParams: D must be > 0");
    if (!(h < 0.0)) throw std::invalid_argument("GridParams: h must be < 0");
    if (!(V > 0.0)) throw std::invalid_argument("GridParams: V must be > 0");
    if (!(R >= 0.0)) throw std::invalid_argument("GridParams: R must be >= 0");
    if (!(X > 0.0)) throw std::invalid_argument("GridParams: X must be > 0");
    if (!std::isfinite(Y_re)) throw std::invalid_argument("GridParams: Y_re must be finite");
  }
};

// Undirected graph of generator sites (nodes) and transmission lines (edges).
// Node indices are zero-based; edges are stored with the smaller index first.
struct PowerNetwork {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> edges;

  int degree(int node) const {
    int d = 0;
    for (const auto& [a, b] : edges)
      if (a == node || b == node) ++d;
    return d;
  }
};

namespace detail {

inline bool is_connected(const PowerNetwork& net) {
  if (net.n_nodes <= 0) return false;
  std::vector<std::vector<int>> adj(net.n_nodes);
  for (const auto& [a, b] : net.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(net.n_nodes, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
  }
  return reached == net.n_nodes;
}

}  // namespace detail

// Checks all PowerNetwork invariants; error messages name the offending edge.
inline void validate_network(const PowerNetwork& net) {
  if (net.n_nodes <= 0) throw std::invalid_argument("topology: n_nodes must be positive");
  std::vector<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    auto [a, b] = net.edges[i];
    if (a == b)
      throw std::invalid_argument("topology: edge #" + std::to_string(i) + " [" +
                                  std::to_string(a) + "," + std::to_string(b) + "] is a self-loop");
    if (a < 0 || b < 0 || a >= net.n_nodes || b >= net.n_nodes)
      throw std::invalid_argument("topology: edge #" + std::to_string(i) + " [" +
                                  std::to_string(a) + "," + std::to_string(b) +
                                  "] has an index out of range (n_nodes=" +
                                  std::to_string(net.n_nodes) + ")");
    const std::pair<int, int> key(std::min(a, b), std::max(a, b));
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw std::invalid_argument("topology: edge #" + std::to_string(i) + " [" +
                                  std::to_string(a) + "," + std::to_string(b) + "] is a duplicate");
    seen.push_back(key);
  }
  if (!detail::is_connected(net))
    throw std::invalid_argument("topology: graph is disconnected");
}

// Subset of generators attached to the control center. The induced
// communication graph is the clique on `connected`: j |> i holds iff i != j
// and both are in the set.
struct CommPlan {
  std::vector<int> connected;  // sorted ascending, no duplicates

  static CommPlan of(std::vector<int> nodes, int n_nodes) {
    std::sort(nodes.begin(), nodes.end());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] < 0 || nodes[i] >= n_nodes)
        throw std::invalid_argument("comm plan: node " + std::to_string(nodes[i]) +
                                    " out of range (n_nodes=" + std::to_string(n_nodes) + ")");
      if (i > 0 && nodes[i] == nodes[i - 1])
        throw std::invalid_argument("comm plan: duplicate node " + std::to_string(nodes[i]));
    }
    return CommPlan{std::move(nodes)};
  }

  bool contains(int node) const {
    return std::binary_search(connected.begin(), connected.end(), node);
  }

  std::size_t size() const { return connected.size(); }
};

// Unit-weight graph Laplacian: degree on the diagonal, -1 per edge.
inline SymMatrix laplacian(const PowerNetwork& net) {
  SymMatrix lp(static_cast<std::size_t>(net.n_nodes));
  for (const auto& [a, b] : net.edges) {
    lp.add(a, b, -1.0);
    lp.add(a, a, 1.0);
    lp.add(b, b, 1.0);
  }
  return lp;
}

// Laplacian of the clique induced by the plan, embedded in an n x n matrix.
// Rows and columns of unconnected nodes stay zero; a 0- or 1-node clique has
// no edges, so the result is the zero matrix.
inline SymMatrix comm_laplacian(const CommPlan& plan, int n_nodes) {
  SymMatrix lc(static_cast<std::size_t>(n_nodes));
  const auto& s = plan.connected;
  const int k = static_cast<int>(s.size());
  if (k < 2) return lc;
  for (int i = 0; i < k; ++i) {
    lc.set(s[i], s[i], static_cast<double>(k - 1));
    for (int j = i + 1; j < k; ++j) lc.set(s[i], s[j], -1.0);
  }
  return lc;
}

// A = c_c * L_c + c_p * L_p, the combined coupling matrix whose largest
// eigenvalue is the planning objective.
inline SymMatrix combined_matrix(const GridParams& params, const SymMatrix& lp,
                                 const SymMatrix& lc) {
  if (lp.order() != lc.order())
    throw std::invalid_argument("combined_matrix: order mismatch (" +
                                std::to_string(lp.order()) + " vs " + std::to_string(lc.order()) + ")");
  const double cp = params.power_coupling();
  const double cc = params.comm_coupling();
  const std::size_t n = lp.order();
  SymMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a.set(i, j, cc * lc(i, j) + cp * lp(i, j));
  return a;
}

// Synchronization threshold -h |Z|^2 / (M V^2 X); strictly positive for valid
// parameters. The verdict compares lambda_max against it with strict <.
inline double sync_threshold(const GridParams& params) {
  return -params.h * params.z_squared() / (params.M * params.V * params.V * params.X);
}

// --- ingestion ---------------------------------------------------------

// Topology document: {"name": str, "n_nodes": int, "one_based": bool,
// "edges": [[a,b], ...]}. With one_based=true the indices are converted to
// zero-based before validation.
inline PowerNetwork load_topology(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("topology: parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("topology: document must be a JSON object");
  if (!doc.contains("n_nodes") || !doc["n_nodes"].is_number_integer())
    throw std::runtime_error("topology: missing integer field 'n_nodes'");
  if (!doc.contains("edges") || !doc["edges"].is_array())
    throw std::runtime_error("topology: missing array field 'edges'");
  const bool one_based = doc.value("one_based", false);

  PowerNetwork net;
  net.n_nodes = doc["n_nodes"].get<int>();
  const auto& edges = doc["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw std::runtime_error("topology: edge #" + std::to_string(i) +
                               " is not a 2-element integer array");
    int a = e[0].get<int>();
    int b = e[1].get<int>();
    if (one_based) {
      --a;
      --b;
    }
    net.edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  validate_network(net);
  return net;
}

inline PowerNetwork load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("topology: cannot open '" + path + "'");
  return load_topology(in);
}

// Parameter file: flat key-value text, one `key = value` per line (the '='
// is optional). '#' starts a comment. Keys: M, D, h, V, R, X, Y_re; missing
// keys keep their defaults.
inline GridParams load_params(std::istream& in) {
  GridParams p;
  std::vector<std::string> assigned;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::replace(line.begin(), line.end(), ':', ' ');
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string value;
    if (!(ls >> value))
      throw std::runtime_error("params: line " + std::to_string(lineno) + ": missing value for '" +
                               key + "'");
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error("params: line " + std::to_string(lineno) + ": trailing content '" +
                               extra + "'");
    if (std::find(assigned.begin(), assigned.end(), key) != assigned.end())
      throw std::runtime_error("params: line " + std::to_string(lineno) + ": duplicate key '" +
                               key + "'");
    assigned.push_back(key);
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::runtime_error("params: line " + std::to_string(lineno) + ": '" + value +
                               "' is not a number");
    }
    if (key == "M") p.M = v;
    else if (key == "D") p.D = v;
    else if (key == "h") p.h = v;
    else if (key == "V") p.V = v;
    else if (key == "R") p.R = v;
    else if (key == "X") p.X = v;
    else if (key == "Y_re") p.Y_re = v;
    else
      throw std::runtime_error("params: line " + std::to_string(lineno) + ": unknown key '" + key +
                               "'");
  }
  p.validate();
  return p;
}

inline GridParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("params: cannot open '" + path + "'");
  return load_params(in);
}

}  // namespace gridsync
