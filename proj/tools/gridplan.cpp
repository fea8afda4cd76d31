// gridplan: communication-network planning for power-grid synchronization.
// Subcommands: plan, sweep, trace, check, simulate, rerun.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridsync/gridsync.hpp"
#include "ne39_embedded.hpp"

using ojson = nlohmann::ordered_json;
using namespace gridsync;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

PowerNetwork resolve_topology(const std::string& spec) {
  if (spec == "ne39") {
    std::istringstream is(gridsync::data::kNewEngland39Json);
    return load_topology(is);
  }
  return load_topology_file(spec);
}

GridParams resolve_params(const std::string& path) {
  if (path.empty()) return GridParams{};
  return load_params_file(path);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::runtime_error("list entry '" + tok + "' is not an integer");
    values.push_back(v);
  }
  return values;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw std::runtime_error("seed list is empty");
  return seeds;
}

std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Every output file gets a sibling <path>.manifest.json recording the exact
// command, inputs and toolkit version; `gridplan rerun <manifest>` replays it.
void write_manifest(const std::string& out_path, const std::vector<std::string>& command,
                    const std::string& topology, const std::string& params,
                    const std::vector<std::string>& outputs) {
  ojson m;
  m["tool"] = "gridplan";
  m["version"] = GRIDSYNC_VERSION;
  m["created_utc"] = iso_utc_now();
  m["command"] = command;
  m["inputs"] = ojson{{"topology", topology}, {"params", params.empty() ? "(defaults)" : params}};
  m["outputs"] = outputs;
  std::ofstream os(out_path + ".manifest.json");
  if (!os) throw std::runtime_error("cannot write manifest '" + out_path + ".manifest.json'");
  os << m.dump(2) << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << text;
}

// Flat key,value rendering of a one-level JSON document (lists join with ';').
std::string doc_as_csv(const ojson& doc) {
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object()) continue;  // traces stay JSON-only
    os << key << ",";
    if (value.is_array()) {
      bool first = true;
      for (const auto& v : value) {
        if (!first) os << ";";
        first = false;
        if (v.is_number_float()) os << fmt17(v.get<double>());
        else os << v.dump();
      }
    } else if (value.is_number_float()) {
      os << fmt17(value.get<double>());
    } else if (value.is_string()) {
      os << value.get<std::string>();
    } else {
      os << value.dump();
    }
    os << "\n";
  }
  return os.str();
}

struct VerdictBundle {
  Prop1Verdict prop1;
  StateSpectrum direct;
};

VerdictBundle verdicts_for(const PowerNetwork& net, const GridParams& params,
                           const CommPlan& plan) {
  const SymMatrix lp = laplacian(net);
  const SymMatrix lc = comm_laplacian(plan, net.n_nodes);
  return VerdictBundle{is_synchronizable_prop1(params, lp, lc),
                       state_spectrum(params, lp, lc)};
}

ojson trace_array(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

PlanResult run_algorithm(const std::string& algo, const PowerNetwork& net,
                         const GridParams& params, int k, const ACSConfig& cfg,
                         std::uint64_t seed) {
  if (algo == "acs") {
    ACSConfig c = cfg;
    c.seed = seed;
    return acs_plan(net, params, k, c);
  }
  if (algo == "greedy") return greedy_exhaustive(net, params, k);
  if (algo == "rayleigh") return greedy_rayleigh(net, params, k);
  if (algo == "random") return random_plan(net, params, k, seed);
  if (algo == "brute") return brute_force_optimal(net, params, k);
  throw std::runtime_error("unknown algorithm '" + algo +
                           "' (expected acs|greedy|rayleigh|random|brute)");
}

bool algorithm_is_seeded(const std::string& algo) { return algo == "acs" || algo == "random"; }

int run_command(std::vector<std::string> args, int depth);

// ---------------------------------------------------------------- plan ----

int cmd_plan(const std::vector<std::string>& argv, const std::string& topology_spec,
             const std::string& params_path, const std::string& algo, int k, std::uint64_t seed,
             const ACSConfig& cfg, const std::string& out, const std::string& format,
             bool timings) {
  const PowerNetwork net = resolve_topology(topology_spec);
  const GridParams params = resolve_params(params_path);
  if (k == 1)
    std::cerr << "gridplan: warning: K=1 connects a single generator; a one-node clique has no"
                 " communication edges, so the objective equals the empty plan\n";
  const PlanResult result = run_algorithm(algo, net, params, k, cfg, seed);
  const VerdictBundle v = verdicts_for(net, params, result.plan);

  ojson doc;
  doc["command"] = "plan";
  doc["algorithm"] = algo;
  doc["topology"] = topology_spec;
  doc["k"] = k;
  if (algorithm_is_seeded(algo)) doc["seed"] = seed;
  doc["plan"] = ojson(result.plan.connected);
  doc["lambda_max"] = result.lambda_max;
  doc["threshold"] = v.prop1.threshold;
  doc["margin"] = v.prop1.margin;
  doc["verdict_prop1"] = v.prop1.synchronizable;
  doc["verdict_direct"] = v.direct.synchronizable_direct;
  doc["disagreement"] = v.prop1.synchronizable != v.direct.synchronizable_direct;
  doc["max_re_phi"] = v.direct.abscissa;
  doc["evaluations"] = result.evaluations;
  doc["wall_ms"] = timings ? ojson(result.wall_ms) : ojson(nullptr);
  if (algo == "acs") {
    doc["pheromone_argmax_plan"] = ojson(result.pheromone_argmax_plan.connected);
    doc["traces"] = ojson{{"best_so_far", trace_array(result.best_so_far_trace)},
                          {"avg_normalized_cost", trace_array(result.avg_cost_trace)}};
  }

  const std::string text = format == "csv" ? doc_as_csv(doc) : doc.dump(2) + "\n";
  std::cout << text;
  if (!out.empty()) {
    write_text_file(out, text);
    write_manifest(out, argv, topology_spec, params_path, {out});
  }
  return 0;
}

// --------------------------------------------------------------- sweep ----

struct SweepCell {
  int k;
  std::string algo;
  std::uint64_t seed;
};

struct SweepRowOut {
  PlanResult result;
  Prop1Verdict prop1;
  bool verdict_direct = false;
};

int cmd_sweep(const std::vector<std::string>& argv, const std::string& topology_spec,
              const std::string& params_path, const std::vector<int>& k_set,
              const std::vector<std::string>& algos, const std::vector<std::uint64_t>& seeds,
              const ACSConfig& cfg, const std::string& out, const std::string& format,
              bool timings, int jobs) {
  const PowerNetwork net = resolve_topology(topology_spec);
  const GridParams params = resolve_params(params_path);

  // Deterministic algorithms run once per K; their row is replicated per seed.
  std::vector<SweepCell> cells;
  for (int k : k_set)
    for (const auto& algo : algos)
      for (std::uint64_t seed : seeds) {
        if (!algorithm_is_seeded(algo) && seed != seeds.front()) continue;
        cells.push_back(SweepCell{k, algo, seed});
      }

  std::vector<SweepRowOut> computed(cells.size());
  std::mutex next_mutex;
  std::size_t next_cell = 0;
  auto worker = [&]() {
    while (true) {
      std::size_t mine;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next_cell >= cells.size()) return;
        mine = next_cell++;
      }
      const SweepCell& c = cells[mine];
      SweepRowOut row;
      row.result = run_algorithm(c.algo, net, params, c.k, cfg, c.seed);
      const VerdictBundle v = verdicts_for(net, params, row.result.plan);
      row.prop1 = v.prop1;
      row.verdict_direct = v.direct.synchronizable_direct;
      computed[mine] = std::move(row);
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // canonical row order: K asc, algorithm asc, seed asc (full cross-product)
  struct FlatRow {
    int k;
    std::string algo;
    std::uint64_t seed;
    const SweepRowOut* data;
  };
  std::vector<FlatRow> rows;
  for (int k : k_set)
    for (const auto& algo : algos)
      for (std::uint64_t seed : seeds) {
        const SweepRowOut* src = nullptr;
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i].k == k && cells[i].algo == algo &&
              (cells[i].seed == seed || !algorithm_is_seeded(algo))) {
            src = &computed[i];
            break;
          }
        rows.push_back(FlatRow{k, algo, seed, src});
      }
  std::stable_sort(rows.begin(), rows.end(), [](const FlatRow& a, const FlatRow& b) {
    if (a.k != b.k) return a.k < b.k;
    if (a.algo != b.algo) return a.algo < b.algo;
    return a.seed < b.seed;
  });

  std::ostringstream os;
  if (format == "json") {
    ojson arr = ojson::array();
    for (const auto& r : rows) {
      ojson row;
      row["K"] = r.k;
      row["algorithm"] = r.algo;
      row["seed"] = r.seed;
      row["lambda_max"] = r.data->result.lambda_max;
      row["margin"] = r.data->prop1.margin;
      row["verdict_prop1"] = r.data->prop1.synchronizable;
      row["verdict_direct"] = r.data->verdict_direct;
      row["evaluations"] = r.data->result.evaluations;
      row["wall_ms"] = timings ? ojson(r.data->result.wall_ms) : ojson(nullptr);
      arr.push_back(row);
    }
    os << arr.dump(2) << "\n";
  } else {
    os << "K,algorithm,seed,lambda_max,margin,verdict_prop1,verdict_direct,evaluations,wall_ms\n";
    for (const auto& r : rows) {
      os << r.k << "," << r.algo << "," << r.seed << "," << fmt17(r.data->result.lambda_max)
         << "," << fmt17(r.data->prop1.margin) << "," << bool_str(r.data->prop1.synchronizable)
         << "," << bool_str(r.data->verdict_direct) << "," << r.data->result.evaluations << ",";
      if (timings) os << fmt17(r.data->result.wall_ms);
      os << "\n";
    }
    // per-K minima as trailing comment lines
    for (int k : k_set) {
      double best = std::numeric_limits<double>::infinity();
      std::string best_algo;
      for (const auto& r : rows)
        if (r.k == k && r.data->result.lambda_max < best) {
          best = r.data->result.lambda_max;
          best_algo = r.algo;
        }
      os << "# K=" << k << " min_lambda_max=" << fmt17(best) << " algorithm=" << best_algo
         << "\n";
    }
  }

  const std::string text = os.str();
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
    write_manifest(out, argv, topology_spec, params_path, {out});
  }
  return 0;
}

// --------------------------------------------------------------- trace ----

int cmd_trace(const std::vector<std::string>& argv, const std::string& topology_spec,
              const std::string& params_path, int k, const std::vector<int>& ants_list,
              const std::vector<std::uint64_t>& seeds, const ACSConfig& cfg,
              const std::string& out, const std::string& format) {
  const PowerNetwork net = resolve_topology(topology_spec);
  const GridParams params = resolve_params(params_path);

  std::ostringstream os;
  ojson arr = ojson::array();
  if (format != "json")
    os << "iteration,best_so_far,avg_normalized_cost,mean_cost,n_ants,seed\n";
  for (int n_ants : ants_list) {
    for (std::uint64_t seed : seeds) {
      ACSConfig c = cfg;
      c.n_ants = n_ants;
      c.seed = seed;
      const PlanResult r = acs_plan(net, params, k, c);
      for (std::size_t i = 0; i < r.best_so_far_trace.size(); ++i) {
        if (format == "json") {
          ojson row;
          row["iteration"] = i + 1;
          row["best_so_far"] = r.best_so_far_trace[i];
          row["avg_normalized_cost"] = r.avg_cost_trace[i];
          row["mean_cost"] = r.mean_cost_trace[i];
          row["n_ants"] = n_ants;
          row["seed"] = seed;
          arr.push_back(row);
        } else {
          os << (i + 1) << "," << fmt17(r.best_so_far_trace[i]) << ","
             << fmt17(r.avg_cost_trace[i]) << "," << fmt17(r.mean_cost_trace[i]) << "," << n_ants
             << "," << seed << "\n";
        }
      }
    }
  }
  if (format == "json") os << arr.dump(2) << "\n";

  const std::string text = os.str();
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
    write_manifest(out, argv, topology_spec, params_path, {out});
  }
  return 0;
}

// --------------------------------------------------------------- check ----

int cmd_check(const std::vector<std::string>& argv, const std::string& topology_spec,
              const std::string& params_path, const std::string& plan_text,
              const std::string& out, const std::string& format) {
  const PowerNetwork net = resolve_topology(topology_spec);
  const GridParams params = resolve_params(params_path);
  const CommPlan plan = CommPlan::of(parse_int_list(plan_text), net.n_nodes);
  const VerdictBundle v = verdicts_for(net, params, plan);

  ojson doc;
  doc["command"] = "check";
  doc["topology"] = topology_spec;
  doc["plan"] = ojson(plan.connected);
  doc["lambda_max"] = v.prop1.lambda_max;
  doc["threshold"] = v.prop1.threshold;
  doc["margin"] = v.prop1.margin;
  doc["verdict_prop1"] = v.prop1.synchronizable;
  doc["verdict_direct"] = v.direct.synchronizable_direct;
  doc["disagreement"] = v.prop1.synchronizable != v.direct.synchronizable_direct;
  doc["max_re_phi"] = v.direct.abscissa;
  ojson roots = ojson::array();
  for (const auto& phi : v.direct.roots) roots.push_back(ojson::array({phi.real(), phi.imag()}));
  doc["phi_roots"] = roots;

  const std::string text = format == "csv" ? doc_as_csv(doc) : doc.dump(2) + "\n";
  std::cout << text;
  if (!out.empty()) {
    write_text_file(out, text);
    write_manifest(out, argv, topology_spec, params_path, {out});
  }
  return 0;
}

// ------------------------------------------------------------ simulate ----

int cmd_simulate(const std::vector<std::string>& argv, const std::string& topology_spec,
                 const std::string& params_path, const std::string& plan_text, SimConfig sim,
                 const std::vector<std::string>& disturb_specs, double tol,
                 const std::string& out, const std::string& metrics_out) {
  const PowerNetwork net = resolve_topology(topology_spec);
  const GridParams params = resolve_params(params_path);
  const CommPlan plan = CommPlan::of(parse_int_list(plan_text), net.n_nodes);

  if (disturb_specs.empty()) {
    sim.disturbance = {{0, 0.0, 0.1}};  // default rate kick at node 0
  } else {
    for (const auto& spec : disturb_specs) {
      Disturbance d;
      if (std::sscanf(spec.c_str(), "%d:%lf:%lf", &d.node, &d.delta_xi, &d.delta_theta) != 3)
        throw std::runtime_error("disturbance '" + spec + "' is not node:delta_xi:delta_theta");
      sim.disturbance.push_back(d);
    }
  }

  const Trajectory traj = simulate(net, plan, params, sim);
  const SettlingMetrics m = settling_metrics(traj, tol);

  std::ostringstream table;
  write_trajectory(table, traj);
  write_text_file(out, table.str());

  ojson doc;
  doc["command"] = "simulate";
  doc["topology"] = topology_spec;
  doc["plan"] = ojson(plan.connected);
  doc["mode"] = sim.mode == SimMode::kNonlinear ? "nonlinear" : "linearized";
  doc["scaling"] =
      sim.scaling == PowerScaling::kUnscaledPower ? "unscaled-power" : "consistent";
  doc["dt"] = sim.dt;
  doc["t_end"] = sim.t_end;
  doc["samples"] = traj.times.size();
  doc["converged"] = m.converged;
  doc["diverged"] = m.diverged;
  doc["blew_up"] = traj.blew_up;
  doc["blow_up_time"] = traj.blew_up ? ojson(traj.blow_up_time) : ojson(nullptr);
  doc["settling_time"] = std::isnan(m.settling_time) ? ojson(nullptr) : ojson(m.settling_time);
  doc["decay_rate"] = m.rate_applicable ? ojson(m.decay_rate) : ojson(nullptr);
  doc["rate_applicable"] = m.rate_applicable;
  doc["initial_level"] = m.initial_level;
  doc["final_level"] = m.final_level;
  doc["trajectory"] = out;

  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  std::vector<std::string> outputs{out};
  if (!metrics_out.empty()) {
    write_text_file(metrics_out, text);
    outputs.push_back(metrics_out);
  }
  write_manifest(out, argv, topology_spec, params_path, outputs);
  return 0;
}

// --------------------------------------------------------------- rerun ----

int cmd_rerun(const std::string& manifest_path, int depth) {
  if (depth > 0) throw std::runtime_error("rerun: refusing to nest reruns");
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("rerun: cannot open '" + manifest_path + "'");
  ojson m;
  try {
    m = ojson::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("rerun: manifest parse failure: ") + e.what());
  }
  if (!m.contains("command") || !m["command"].is_array())
    throw std::runtime_error("rerun: manifest has no command array");
  std::vector<std::string> replay;
  for (const auto& a : m["command"]) replay.push_back(a.get<std::string>());
  return run_command(std::move(replay), depth + 1);
}

// ------------------------------------------------------------ dispatch ----

int run_command(std::vector<std::string> args, int depth) {
  CLI::App app{"communication-network planning for power-grid synchronization"};
  app.set_version_flag("--version", std::string("gridplan ") + GRIDSYNC_VERSION);
  app.require_subcommand(1);

  std::string topology = "ne39";
  std::string params_path;
  std::string out;
  std::string plan_format = "json", sweep_format = "csv", trace_format = "csv",
              check_format = "json";
  std::string algo = "acs";
  std::uint64_t seed = 1;
  int k = 0;
  bool timings = false;
  ACSConfig cfg;

  auto add_common = [&](CLI::App* sub, std::string& format_var) {
    sub->add_option("--topology", topology, "topology file path, or the built-in alias 'ne39'")
        ->capture_default_str();
    sub->add_option("--params", params_path, "parameter file (defaults when omitted)");
    sub->add_option("--out", out, "write the result document to this path (plus a manifest)");
    sub->add_option("--format", format_var, "output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_flag("--timings", timings, "include wall-clock fields (breaks byte reproducibility)");
  };
  auto add_acs_knobs = [&](CLI::App* sub) {
    sub->add_option("--iterations", cfg.n_iterations, "ACS iterations")->capture_default_str();
    sub->add_option("--ants", cfg.n_ants, "ACS ants per iteration")->capture_default_str();
    sub->add_option("--gamma", cfg.gamma, "pheromone award constant")->capture_default_str();
    sub->add_option("--rho", cfg.rho, "evaporation in (0,1)")->capture_default_str();
    sub->add_option("--q0", cfg.q_threshold, "exploitation threshold Q")->capture_default_str();
    sub->add_option("--alpha", cfg.alpha, "pheromone exponent")->capture_default_str();
    sub->add_option("--beta", cfg.beta, "cost exponent")->capture_default_str();
    sub->add_option("--tau0", cfg.tau0, "initial pheromone")->capture_default_str();
    sub->add_flag("--exploit-on-low-q", cfg.exploit_on_low_q,
                  "invert the exploitation branch to the classic ACS convention");
  };

  auto* plan_cmd = app.add_subcommand("plan", "search for a communication plan");
  add_common(plan_cmd, plan_format);
  add_acs_knobs(plan_cmd);
  plan_cmd->add_option("--algo", algo, "acs|greedy|rayleigh|random|brute")
      ->check(CLI::IsMember({"acs", "greedy", "rayleigh", "random", "brute"}))
      ->capture_default_str();
  plan_cmd->add_option("--k", k, "link budget")->required();
  plan_cmd->add_option("--seed", seed, "random seed (acs, random)")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "cross-product of budgets, algorithms, seeds");
  std::string algos_text = "acs,greedy,random";
  std::string seeds_text = "1,2,3,4,5";
  std::string k_set_text;
  int k_min = 2, k_max = 0, k_step = 1, jobs = 1;
  add_common(sweep_cmd, sweep_format);
  add_acs_knobs(sweep_cmd);
  sweep_cmd->add_option("--algos", algos_text, "comma list of algorithms")->capture_default_str();
  sweep_cmd->add_option("--seeds", seeds_text, "comma list of seeds")->capture_default_str();
  sweep_cmd->add_option("--k-set", k_set_text, "explicit comma list of K values");
  sweep_cmd->add_option("--k-min", k_min, "sweep start")->capture_default_str();
  sweep_cmd->add_option("--k-max", k_max, "sweep end (inclusive)");
  sweep_cmd->add_option("--k-step", k_step, "sweep stride")->capture_default_str();
  sweep_cmd->add_option("--jobs", jobs, "worker threads (output is order-independent)")
      ->capture_default_str();

  auto* trace_cmd = app.add_subcommand("trace", "per-iteration ACS cost traces");
  std::string ants_list_text;
  std::string trace_seeds_text = "1";
  add_common(trace_cmd, trace_format);
  add_acs_knobs(trace_cmd);
  trace_cmd->add_option("--k", k, "link budget")->required();
  trace_cmd->add_option("--ants-list", ants_list_text, "comma list of ant counts, one trace block each");
  trace_cmd->add_option("--seeds", trace_seeds_text, "comma list of seeds")->capture_default_str();

  auto* check_cmd = app.add_subcommand("check", "synchronizability verdicts for a plan");
  std::string plan_text;
  add_common(check_cmd, check_format);
  check_cmd->add_option("--plan", plan_text, "comma list of connected generators (empty allowed)");

  auto* sim_cmd = app.add_subcommand("simulate", "time-domain swing dynamics");
  SimConfig sim;
  std::vector<std::string> disturb_specs;
  std::string mode_text = "linearized";
  std::string metrics_out;
  bool unscaled_power = false;
  double tol = 1e-3;
  add_common(sim_cmd, check_format);
  sim_cmd->add_option("--plan", plan_text, "comma list of connected generators");
  sim_cmd->add_option("--dt", sim.dt, "integration step (s)")->capture_default_str();
  sim_cmd->add_option("--t-end", sim.t_end, "horizon (s)")->capture_default_str();
  sim_cmd->add_option("--mode", mode_text, "linearized|nonlinear")
      ->check(CLI::IsMember({"linearized", "nonlinear"}))
      ->capture_default_str();
  sim_cmd->add_flag("--unscaled-power", unscaled_power,
                    "keep the power-coupling term unscaled by 1/M (published first-order form)");
  sim_cmd->add_option("--disturb", disturb_specs,
                      "disturbance node:delta_xi:delta_theta (repeatable; default 0:0:0.1)");
  sim_cmd->add_option("--record-stride", sim.record_stride, "sample decimation")
      ->capture_default_str();
  sim_cmd->add_option("--tol", tol, "settling tolerance")->capture_default_str();
  sim_cmd->get_option("--out")->required()->description("trajectory table path");
  sim_cmd->add_option("--metrics-out", metrics_out, "also write the metrics document here");

  auto* rerun_cmd = app.add_subcommand("rerun", "replay a run manifest");
  std::string manifest_path;
  rerun_cmd->add_option("manifest", manifest_path, "path to a .manifest.json")->required();

  std::vector<const char*> cargs;
  cargs.push_back("gridplan");
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), const_cast<char**>(cargs.data()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (rerun_cmd->parsed()) return cmd_rerun(manifest_path, depth);
  if (plan_cmd->parsed())
    return cmd_plan(args, topology, params_path, algo, k, seed, cfg, out, plan_format, timings);
  if (sweep_cmd->parsed()) {
    std::vector<int> k_set;
    if (!k_set_text.empty()) {
      k_set = parse_int_list(k_set_text);
    } else {
      if (k_max < k_min) throw std::runtime_error("sweep: --k-max must be >= --k-min");
      if (k_step < 1) throw std::runtime_error("sweep: --k-step must be >= 1");
      for (int v = k_min; v <= k_max; v += k_step) k_set.push_back(v);
    }
    std::vector<std::string> algos;
    std::stringstream ss(algos_text);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) algos.push_back(tok);
    return cmd_sweep(args, topology, params_path, k_set, algos, parse_seed_list(seeds_text), cfg,
                     out, sweep_format, timings, jobs);
  }
  if (trace_cmd->parsed()) {
    std::vector<int> ants_list;
    if (ants_list_text.empty()) ants_list.push_back(cfg.n_ants);
    else ants_list = parse_int_list(ants_list_text);
    return cmd_trace(args, topology, params_path, k, ants_list, parse_seed_list(trace_seeds_text),
                     cfg, out, trace_format);
  }
  if (check_cmd->parsed())
    return cmd_check(args, topology, params_path, plan_text, out, check_format);
  if (sim_cmd->parsed()) {
    sim.mode = mode_text == "nonlinear" ? SimMode::kNonlinear : SimMode::kLinearized;
    sim.scaling = unscaled_power ? PowerScaling::kUnscaledPower : PowerScaling::kConsistent;
    return cmd_simulate(args, topology, params_path, plan_text, sim, disturb_specs, tol, out,
                        metrics_out);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_command(std::move(args), 0);
  } catch (const std::exception& e) {
    std::cerr << "gridplan: error: " << e.what() << "\n";
    return 1;
  }
}
