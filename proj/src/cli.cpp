#include "omk/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "omk/bloch.hpp"
#include "omk/disorder.hpp"
#include "omk/dynamics.hpp"
#include "omk/errors.hpp"
#include "omk/io.hpp"
#include "omk/kernels.hpp"
#include "omk/lattice.hpp"
#include "omk/markov.hpp"
#include "omk/stripe.hpp"

namespace omk {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Kind { Number, Integer, Text, Flag };

struct KeyDef {
  std::string block;  // "" for top level, "params", or the command name
  std::string name;
  Kind kind;
  std::string help;
};

const std::vector<std::string> kCommands = {"bands",    "chern",    "gapmap",   "stripe",
                                            "transfer", "disorder", "stability"};

std::vector<KeyDef> key_table(const std::string& cmd) {
  std::vector<KeyDef> keys = {
      {"", "output_dir", Kind::Text, "directory for artifacts"},
      {"", "threads", Kind::Integer, "OpenMP threads (default: all cores)"},
      {"", "seed", Kind::Integer, "RNG seed"},
      {"params", "G", Kind::Number, "optomechanical coupling [K]"},
      {"params", "delta_OM", Kind::Number, "optical-band detuning [K]"},
      {"params", "Delta", Kind::Number, "laser detuning [K] (instead of delta_OM)"},
      {"params", "J", Kind::Number, "photon hopping [K]"},
      {"params", "K", Kind::Number, "phonon hopping"},
      {"params", "omega_M", Kind::Number, "mechanical frequency [K]"},
      {"params", "delta_theta", Kind::Number, "drive phase step between sites [rad]"},
      {"params", "omega_C", Kind::Number, "optical frequency [K]"},
      {"params", "Q_C", Kind::Number, "optical quality factor"},
      {"params", "Q_M", Kind::Number, "mechanical quality factor"},
      {"params", "kappa_C", Kind::Number, "optical decay rate [K] (instead of Q_C)"},
      {"params", "kappa_M", Kind::Number, "mechanical decay rate [K] (instead of Q_M)"},
  };
  auto add = [&](const char* name, Kind kind, const char* help) {
    keys.push_back({cmd, name, kind, help});
  };
  if (cmd == "bands") {
    add("path", Kind::Text, "high-symmetry path, e.g. GKMK'G");
    add("points", Kind::Integer, "samples per path segment");
  } else if (cmd == "chern") {
    add("grid", Kind::Integer, "Brillouin-zone grid N");
  } else if (cmd == "gapmap") {
    add("G_grid", Kind::Text, "G values: start:stop:count or a comma list");
    add("delta_grid", Kind::Text, "delta_OM values: start:stop:count or a comma list");
    add("grid", Kind::Integer, "Brillouin-zone grid N for each cell");
  } else if (cmd == "stripe") {
    add("Ny", Kind::Integer, "cells across the stripe");
    add("nkx", Kind::Integer, "k_x samples");
    add("grid", Kind::Integer, "bulk grid N for the gap window");
  } else if (cmd == "transfer" || cmd == "disorder") {
    add("Nx", Kind::Integer, "cells along x");
    add("Ny", Kind::Integer, "cells along y");
    add("emitter", Kind::Text, "emitter site m,n,S");
    add("receiver", Kind::Text, "receiver site m,n,S");
    add("g_max", Kind::Number, "maximal spin-phonon coupling [K]");
    add("omega_0", Kind::Number, "TLS frequency [K] (default: mid-gap)");
    add("time_unit", Kind::Number, "pulse time unit [1/K] (default: 1/gamma_max)");
    add("duration", Kind::Number, "run length in time units");
    add("dt", Kind::Number, "integrator step [1/K]");
    add("dt_opt", Kind::Number, "receiver control interval in time units");
    add("record_every", Kind::Integer, "record every n-th step");
    add("stripe_Ny", Kind::Integer, "stripe depth for the edge-channel analysis");
    add("grid", Kind::Integer, "bulk grid N for the gap window");
    add("absorber_row", Kind::Integer, "first absorbing row (-1: closed edge loop)");
    add("absorber_kappa", Kind::Number, "absorber loss at the bottom row [K]");
    if (cmd == "transfer") {
      add("markov", Kind::Flag, "also write the Markov prediction (nodes on the top edge)");
    } else {
      add("W", Kind::Text, "disorder strengths, comma list (overrides W_eps)");
      add("W_eps", Kind::Text, "disorder strengths in units of eps/omega_M, comma list");
      add("realizations", Kind::Integer, "realizations per W");
      add("targets", Kind::Text, "disordered parameters, comma list");
      add("shared_draw", Kind::Flag, "one draw per site for all parameters");
      add("reoptimize", Kind::Flag, "re-optimize the receiver per realization");
    }
  }
  return keys;
}

json defaults(const std::string& cmd) {
  const bool transport = cmd == "transfer" || cmd == "disorder";
  json params = {{"G", 2.0},
                 {"delta_OM", transport ? 4.0 : 3.0},
                 {"J", 200.0},
                 {"K", 1.0},
                 {"omega_M", 460.0},
                 {"delta_theta", (transport ? -2.0 : 2.0) * std::numbers::pi / 3.0},
                 {"omega_C", 2e6},
                 {"Q_C", 5e7},
                 {"Q_M", 1e6}};
  json block;
  if (cmd == "bands") block = {{"path", "GKMK'G"}, {"points", 60}};
  if (cmd == "chern") block = {{"grid", 48}};
  if (cmd == "gapmap") block = {{"G_grid", "0.25:5:20"}, {"delta_grid", "1:20:20"}, {"grid", 24}};
  if (cmd == "stripe") block = {{"Ny", 21}, {"nkx", 401}, {"grid", 48}};
  if (transport) {
    const ScenarioConfig sc;
    block = {{"Nx", sc.Nx},       {"Ny", sc.Ny},
             {"emitter", "2,0,B"}, {"receiver", "0,2,B"},
             {"g_max", sc.g_max}, {"duration", sc.duration_units},
             {"dt", sc.dt},       {"dt_opt", sc.dt_opt_units},
             {"record_every", sc.record_every}, {"stripe_Ny", sc.stripe_Ny},
             {"grid", sc.gap_grid}, {"absorber_row", sc.absorber_first_row},
             {"absorber_kappa", sc.absorber_kappa}};
    if (cmd == "transfer") {
      block["markov"] = false;
    } else {
      block["W_eps"] = "0,0.25,0.5,1,2,3";
      block["realizations"] = 50;
      block["targets"] = "omega_M,Delta,G,kappa_C,kappa_M";
      block["shared_draw"] = false;
      block["reoptimize"] = false;
    }
  }
  json d = {{"command", cmd}, {"output_dir", "out"}, {"params", params}};
  if (!block.is_null()) d[cmd] = block;
  return d;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (auto& c : f) {
    if (c == '_') c = '-';
    else if (key.size() > 1) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return "--" + f;
}

json& slot(json& cfg, const KeyDef& k) {
  return k.block.empty() ? cfg[k.name] : cfg[k.block][k.name];
}

json typed_value(const KeyDef& k, const json& v) {
  auto bad = [&](const char* what) {
    return InvalidArgument("key '" + k.name + "' expects " + what);
  };
  switch (k.kind) {
    case Kind::Number:
      if (!v.is_number()) throw bad("a number");
      return v.get<double>();
    case Kind::Integer:
      if (!v.is_number_integer()) throw bad("an integer");
      return v.get<long>();
    case Kind::Text:
      if (!v.is_string()) throw bad("a string");
      return v;
    case Kind::Flag:
      if (!v.is_boolean()) throw bad("true or false");
      return v;
  }
  return v;
}

json parse_flag_value(const KeyDef& k, const std::string& s) {
  try {
    std::size_t used = 0;
    switch (k.kind) {
      case Kind::Number: {
        const double x = std::stod(s, &used);
        if (used != s.size()) break;
        return x;
      }
      case Kind::Integer: {
        const long x = std::stol(s, &used);
        if (used != s.size()) break;
        return x;
      }
      case Kind::Text:
        return s;
      case Kind::Flag:
        return s == "true" || s == "1";
    }
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("bad value '" + s + "' for " + flag_name(k.name));
}

// Checks a config file against the key table of its command.
void check_schema(const json& file, const std::string& cmd) {
  if (!file.is_object()) throw InvalidArgument("config must be a JSON object");
  const auto keys = key_table(cmd);
  auto known = [&](const std::string& block, const std::string& name) {
    for (const auto& k : keys)
      if (k.block == block && k.name == name) return &k;
    return static_cast<const KeyDef*>(nullptr);
  };
  for (auto it = file.begin(); it != file.end(); ++it) {
    if (it.key() == "command") continue;
    if (it.key() == "params" || it.key() == cmd) {
      if (!it->is_object()) throw InvalidArgument("'" + it.key() + "' must be an object");
      for (auto jt = it->begin(); jt != it->end(); ++jt) {
        const KeyDef* k = known(it.key(), jt.key());
        if (!k) throw InvalidArgument("unknown key '" + it.key() + "." + jt.key() + "'");
        typed_value(*k, *jt);
      }
      continue;
    }
    const KeyDef* k = known("", it.key());
    if (!k) throw InvalidArgument("unknown key '" + it.key() + "'");
    typed_value(*k, *it);
  }
}

void merge(json& into, const json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) {
    if (it->is_object() && into.contains(it.key()) && into[it.key()].is_object())
      merge(into[it.key()], *it);
    else
      into[it.key()] = *it;
  }
}

std::vector<double> parse_grid(const std::string& s, const std::string& what) {
  std::vector<double> out;
  try {
    if (s.find(':') != std::string::npos) {
      std::stringstream ss(s);
      std::string a, b, c;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, c, ':');
      const double lo = std::stod(a), hi = std::stod(b);
      const int n = std::stoi(c);
      if (n < 1) throw InvalidArgument(what + ": count must be positive");
      for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    } else {
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    }
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) throw;
    throw InvalidArgument(what + ": cannot parse '" + s + "'");
  }
  if (out.empty()) throw InvalidArgument(what + " is empty");
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

NodeSpec parse_node(const std::string& s, const char* what) {
  const auto parts = split(s);
  try {
    if (parts.size() == 3 && parts[2].size() == 1)
      return {std::stoi(parts[0]), std::stoi(parts[1]), basis_from_char(parts[2][0])};
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument(std::string(what) + " must look like m,n,S (e.g. 2,0,B)");
}

OmParams resolve_params(const json& p) {
  OmParams o;
  o.J = p.at("J").get<double>();
  o.K = p.at("K").get<double>();
  o.omega_M = p.at("omega_M").get<double>();
  o.G = p.at("G").get<double>();
  o.delta_theta = p.at("delta_theta").get<double>();
  if (p.contains("Delta"))
    o.Delta = p.at("Delta").get<double>();
  else
    o.Delta = -p.at("delta_OM").get<double>() - 2.0 * o.J - o.omega_M - o.K;
  o.kappa_C = p.contains("kappa_C") ? p.at("kappa_C").get<double>()
                                    : decay_rate(p.at("omega_C").get<double>(), p.at("Q_C").get<double>());
  o.kappa_M = p.contains("kappa_M") ? p.at("kappa_M").get<double>()
                                    : decay_rate(o.omega_M, p.at("Q_M").get<double>());
  if (o.kappa_C < 0.0 || o.kappa_M < 0.0) throw InvalidArgument("decay rates must be non-negative");
  o.validate();
  return o;
}

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> text;  // file name, contents
  json summary;
};

void add_csv(Artifacts& a, const std::string& name, const CsvTable& t) {
  a.text.emplace_back(name, t.str());
}

void add_json(Artifacts& a, const std::string& name, const json& j) {
  a.text.emplace_back(name, j.dump(2) + "\n");
}

int positive(const json& blk, const char* key) {
  const long v = blk.at(key).get<long>();
  if (v < 1) throw InvalidArgument(std::string(key) + " must be positive");
  return static_cast<int>(v);
}

// ---- commands -------------------------------------------------------------

Artifacts cmd_bands(const json& cfg, const OmParams& p) {
  const json& b = cfg.at("bands");
  const KPath path = high_symmetry_path(b.at("path").get<std::string>(), positive(b, "points"));
  const BandStructure bs = band_structure(p, path.k);
  std::vector<std::string> head = {"index", "distance", "kx", "ky", "label"};
  for (int n = 1; n <= 6; ++n) head.push_back("E" + std::to_string(n));
  for (int n = 1; n <= 6; ++n) head.push_back("phonon_weight" + std::to_string(n));
  CsvTable t(head);
  for (std::size_t i = 0; i < bs.size(); ++i) {
    t.add(i).add(path.distance[i]).add(path.k[i].x).add(path.k[i].y).add(path.labels[i]);
    for (int n = 0; n < 6; ++n) t.add(bs.energies[i][n]);
    for (int n = 0; n < 6; ++n) t.add(bs.phonon_weight(i, n));
    t.end_row();
  }
  Artifacts a;
  add_csv(a, "bands.csv", t);
  a.summary = {{"points", bs.size()}};
  return a;
}

Artifacts cmd_chern(const json& cfg, const OmParams& p) {
  const int N = positive(cfg.at("chern"), "grid");
  const auto rep = chern_numbers(p, N);
  const GapReport gap = numerical_gap(p, std::max(N, 24));
  json C = json::array(), residual = json::array();
  int sum = 0;
  for (const auto& r : rep) {
    C.push_back(r.chern);
    residual.push_back(r.curvature_sum_residual);
    sum += r.chern;
  }
  Artifacts a;
  a.summary = {{"C", C},
               {"sum", sum},
               {"grid_N", N},
               {"integer_residual", residual},
               {"gap_12", gap.gap_12},
               {"gap_23", gap.gap_23}};
  add_json(a, "chern.json", a.summary);
  return a;
}

Artifacts cmd_gapmap(const json& cfg, const OmParams& base) {
  const json& b = cfg.at("gapmap");
  const auto Gs = parse_grid(b.at("G_grid").get<std::string>(), "G_grid");
  const auto ds = parse_grid(b.at("delta_grid").get<std::string>(), "delta_grid");
  const int N = positive(b, "grid");
  CsvTable t({"G", "delta_OM", "valid", "epsilon", "gap_12", "analytic_epsilon", "G_c", "G_min",
              "above_critical"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t invalid = 0;
  for (double d : ds) {
    for (double G : Gs) {
      t.add(G).add(d);
      if (d <= 0.0 || G < 0.0) {
        ++invalid;
        t.add(false).add(nan).add(nan).add(nan).add(nan).add(nan).add(false);
        t.end_row();
        continue;
      }
      OmParams p = OmParams::from_detuning(G, d, base.J, base.omega_M, base.K);
      p.delta_theta = base.delta_theta;
      const GapReport gap = numerical_gap(p, N);
      const AnalyticGap an = analytic_gap(p);
      const CriticalCouplings cc = critical_coupling(p);
      t.add(true).add(gap.epsilon).add(gap.gap_12).add(an.epsilon).add(cc.G_c_analytic);
      t.add(cc.G_min).add(an.above_critical);
      t.end_row();
    }
  }
  Artifacts a;
  add_csv(a, "gapmap.csv", t);
  a.summary = {{"cells", t.rows()}, {"invalid_cells", invalid}};
  return a;
}

Artifacts cmd_stripe(const json& cfg, const OmParams& p) {
  const json& b = cfg.at("stripe");
  const int Ny = positive(b, "Ny");
  const int nkx = positive(b, "nkx");
  if (Ny < 2) throw InvalidArgument("Ny must be at least 2");
  const GapReport gap = numerical_gap(p.lossless(), positive(b, "grid"));
  const GapWindow win = edge_window(gap);
  const StripeBands bands = stripe_bands(p, Ny, default_kx_grid(nkx));
  const auto edges = extract_edge_states(bands, win);

  CsvTable tb({"k_x", "band", "omega", "phonon_weight", "center"});
  for (std::size_t i = 0; i < bands.k_x.size(); ++i)
    for (Eigen::Index n = 0; n < bands.energies[i].size(); ++n) {
      tb.add(bands.k_x[i]).add(static_cast<long>(n)).add(bands.energies[i][n]);
      tb.add(bands.phonon_weight[i][n]).add(bands.center[i][n]);
      tb.end_row();
    }
  CsvTable te({"k_x", "side", "omega_E", "v_g", "xi", "P_opt", "P_mech", "kappa_E", "abs_u_A",
               "abs_u_B", "abs_u_C", "fit_residual"});
  std::map<double, std::array<int, 2>> per_k;
  for (const auto& e : edges) {
    te.add(e.k_x).add(side_name(e.side)).add(e.omega_E).add(e.v_g).add(e.xi).add(e.P_opt);
    te.add(e.P_mech).add(e.kappa_E);
    for (const auto& u : e.u) te.add(std::abs(u));
    te.add(e.fit_residual);
    te.end_row();
    ++per_k[e.k_x][e.side == EdgeSide::Upper ? 0 : 1];
  }
  int max_upper = 0, max_lower = 0;
  for (const auto& [k, c] : per_k) {
    max_upper = std::max(max_upper, c[0]);
    max_lower = std::max(max_lower, c[1]);
  }
  json warnings = json::array();
  if (auto w = stripe_depth_warning(Ny)) warnings.push_back(*w);

  Artifacts a;
  add_csv(a, "stripe_bands.csv", tb);
  add_csv(a, "edge_states.csv", te);
  a.summary = {{"N_y", Ny},
               {"window", {win.lo, win.hi}},
               {"edge_states", edges.size()},
               {"branches_upper", max_upper},
               {"branches_lower", max_lower},
               {"warnings", warnings}};
  add_json(a, "stripe.json", a.summary);
  return a;
}

ScenarioConfig scenario_config(const json& cfg, const std::string& cmd) {
  const json& p = cfg.at("params");
  const json& b = cfg.at(cmd);
  ScenarioConfig sc;
  sc.Nx = positive(b, "Nx");
  sc.Ny = positive(b, "Ny");
  sc.G = p.at("G").get<double>();
  sc.J = p.at("J").get<double>();
  sc.omega_M = p.at("omega_M").get<double>();
  sc.delta_OM = p.contains("Delta") ? -p.at("Delta").get<double>() - 2.0 * sc.J - sc.omega_M -
                                          p.at("K").get<double>()
                                    : p.at("delta_OM").get<double>();
  sc.omega_C = p.at("omega_C").get<double>();
  sc.Q_C = p.at("Q_C").get<double>();
  sc.Q_M = p.at("Q_M").get<double>();
  sc.delta_theta = p.at("delta_theta").get<double>();
  sc.g_max = b.at("g_max").get<double>();
  sc.emitter = parse_node(b.at("emitter").get<std::string>(), "emitter");
  sc.receiver = parse_node(b.at("receiver").get<std::string>(), "receiver");
  if (b.contains("omega_0")) sc.omega_0 = b.at("omega_0").get<double>();
  if (b.contains("time_unit")) sc.time_unit = b.at("time_unit").get<double>();
  sc.duration_units = b.at("duration").get<double>();
  sc.dt = b.at("dt").get<double>();
  sc.dt_opt_units = b.at("dt_opt").get<double>();
  sc.record_every = static_cast<std::size_t>(positive(b, "record_every"));
  sc.stripe_Ny = positive(b, "stripe_Ny");
  sc.gap_grid = positive(b, "grid");
  sc.absorber_first_row = static_cast<int>(b.at("absorber_row").get<long>());
  sc.absorber_kappa = b.at("absorber_kappa").get<double>();
  if (!(sc.g_max > 0.0) || !(sc.dt > 0.0) || !(sc.duration_units > 0.0) || !(sc.dt_opt_units > 0.0))
    throw InvalidArgument("g_max, dt, duration and dt_opt must be positive");
  if (p.contains("kappa_C") || p.contains("kappa_M"))
    throw InvalidArgument(cmd + " takes quality factors Q_C and Q_M, not decay rates");
  return sc;
}

json channel_json(const TransferScenario& sc) {
  const ChannelInfo& c = sc.channel;
  return {{"omega_0", c.omega_0}, {"k_0", c.k_0},         {"v_g", c.v_g},
          {"abs_u_B", c.u_abs},   {"xi", c.xi},           {"P_opt", c.P_opt},
          {"kappa_E", c.kappa_E}, {"gamma_max", c.gamma_max},
          {"gamma_max_over_g_max", c.gamma_max / sc.g_max},
          {"epsilon", c.epsilon}, {"time_unit", sc.time_unit}};
}

Artifacts cmd_transfer(const json& cfg) {
  const ScenarioConfig sc_cfg = scenario_config(cfg, "transfer");
  TransferScenario sc = make_scenario(sc_cfg);
  const TransferResult res = run_transfer(sc);

  CsvTable t({"t", "abs_a_e2", "abs_a_r2", "re_a_e", "im_a_e", "re_a_r", "im_a_r",
              "channel_occupation", "norm", "leaked"});
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    t.add(res.times[i]).add(std::norm(res.a_e[i])).add(std::norm(res.a_r[i]));
    t.add(res.a_e[i].real()).add(res.a_e[i].imag()).add(res.a_r[i].real()).add(res.a_r[i].imag());
    t.add(res.channel_occupation[i]).add(res.norm[i]).add(res.leaked[i]);
    t.end_row();
  }
  CsvTable pulse({"t_start", "abs_g", "arg_g"});
  const auto& rp = res.receiver_pulse;
  for (std::size_t i = 0; i < rp.values.size(); ++i) {
    pulse.add(rp.t0 + i * rp.interval).add(std::abs(rp.values[i])).add(std::arg(rp.values[i]));
    pulse.end_row();
  }
  Artifacts a;
  add_csv(a, "transfer.csv", t);
  add_csv(a, "receiver_pulse.csv", pulse);
  a.summary = {{"F", res.F},
               {"t_f", res.t_f},
               {"t_peak", res.t_peak},
               {"bookkeeping_error", res.bookkeeping_error},
               {"channel", channel_json(sc)},
               {"warnings", res.warnings}};
  if (cfg.at("transfer").at("markov").get<bool>()) {
    const MarkovComparison cmp = compare_with_markov(sc, res, sc.dt);
    add_csv(a, "markov.csv", markov_table(cmp.markov));
    a.summary["markov"] = {{"max_dev_a_e", cmp.max_dev_e},
                           {"max_dev_a_r", cmp.max_dev_r},
                           {"delay", cmp.markov.delay},
                           {"delay_rounding", cmp.markov.delay_rounding}};
  }
  add_json(a, "transfer.json", a.summary);
  return a;
}

std::uint64_t scenario_hash(const json& cfg) {
  json s = cfg;
  s.erase("output_dir");
  s.erase("threads");
  return fnv1a64(s.dump());
}

Artifacts cmd_disorder(const json& cfg) {
  if (!cfg.contains("seed")) throw InvalidArgument("disorder needs --seed");
  const json& b = cfg.at("disorder");
  const ScenarioConfig sc_cfg = scenario_config(cfg, "disorder");
  DisorderSpec spec;
  const long seed = cfg.at("seed").get<long>();
  if (seed < 0) throw InvalidArgument("seed must be non-negative");
  spec.seed = static_cast<std::uint64_t>(seed);
  spec.n_realizations = static_cast<std::size_t>(positive(b, "realizations"));
  spec.shared_draw = b.at("shared_draw").get<bool>();
  spec.reoptimize = b.at("reoptimize").get<bool>();
  spec.targets.clear();
  for (const auto& name : split(b.at("targets").get<std::string>()))
    spec.targets.push_back(target_from_name(name));
  std::optional<std::vector<double>> W_abs;
  if (b.contains("W")) W_abs = parse_grid(b.at("W").get<std::string>(), "W");
  const auto W_eps = parse_grid(b.at("W_eps").get<std::string>(), "W_eps");
  for (double w : W_abs ? *W_abs : W_eps)
    if (w < 0.0) throw InvalidArgument("disorder strengths must be non-negative");

  TransferScenario sc = make_scenario(sc_cfg);
  std::vector<double> grid;
  if (W_abs) {
    grid = *W_abs;
  } else {
    for (double f : W_eps) grid.push_back(f * sc.channel.epsilon / sc.params.omega_M);
  }
  const TransferResult clean = run_transfer(sc);
  const DisorderSweep sweep = fidelity_sweep(sc, clean, grid, spec);

  CsvTable t({"W", "W_omega_M_over_eps", "mean_F", "stderr", "n"});
  CsvTable raw({"W", "realization", "F"});
  for (const auto& pt : sweep.points) {
    t.add(pt.W).add(pt.W * sc.params.omega_M / sc.channel.epsilon).add(pt.mean_F);
    t.add(pt.stderr_F).add(pt.n);
    t.end_row();
    for (std::size_t r = 0; r < pt.F.size(); ++r) {
      raw.add(pt.W).add(r).add(pt.F[r]);
      raw.end_row();
    }
  }
  Artifacts a;
  add_csv(a, "disorder.csv", t);
  add_csv(a, "disorder_realizations.csv", raw);
  a.summary = {{"clean_F", sweep.clean_F},
               {"epsilon", sc.channel.epsilon},
               {"crossover_W", sweep.crossover_W ? json(*sweep.crossover_W) : json()},
               {"seed", spec.seed},
               {"scenario_hash", hex64(scenario_hash(cfg))}};
  add_json(a, "disorder.json", a.summary);
  return a;
}

Artifacts cmd_stability(const OmParams& p) {
  const StabilityReport r = check_stability(p);
  Artifacts a;
  a.summary = {{"delta_K", r.delta_K},
               {"kappa_M", p.kappa_M},
               {"kappa_C", p.kappa_C},
               {"required_kappa_M", r.required_kappa_M},
               {"margin_ratio", std::isfinite(r.margin_ratio) ? json(r.margin_ratio) : json("inf")},
               {"stable", r.stable}};
  add_json(a, "stability.json", a.summary);
  return a;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

struct Invocation {
  std::string command;
  json cfg;
  bool threads_from_flag = false;
};

// Parses arguments into a fully resolved config. Throws InvalidArgument.
Invocation parse(const std::vector<std::string>& args, std::ostream& out, int& early_exit) {
  CLI::App app{"Optomechanical Kagome lattice: bands, edge channels and state transfer", "omk"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  std::map<std::string, std::map<std::string, std::string>> text;  // cmd -> flag -> value
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, std::vector<std::pair<KeyDef, CLI::Option*>>> opts;
  // Top-level keys are also accepted before (or without) a command.
  for (const auto& k : key_table("")) {
    if (!k.block.empty()) continue;
    opts[""].emplace_back(k, app.add_option(flag_name(k.name), text[""][k.name], k.help));
  }
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd);
    sub->add_option("--config", config_path, "JSON config file");
    for (const auto& k : key_table(cmd)) {
      CLI::Option* o = nullptr;
      if (k.kind == Kind::Flag)
        o = sub->add_flag(flag_name(k.name), flags[cmd][k.name], k.help);
      else
        o = sub->add_option(flag_name(k.name), text[cmd][k.name], k.help);
      opts[cmd].emplace_back(k, o);
    }
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    early_exit = app.exit(e, out, out);
    return {};
  } catch (const CLI::ParseError& e) {
    throw InvalidArgument(e.what());
  }

  json file;
  if (!config_path.empty()) file = read_json(config_path);
  std::string cmd;
  for (const auto& c : kCommands)
    if (app.got_subcommand(c)) cmd = c;
  if (file.is_object() && file.contains("command")) {
    if (!file["command"].is_string()) throw InvalidArgument("'command' must be a string");
    const std::string fc = file["command"];
    if (!cmd.empty() && fc != cmd)
      throw InvalidArgument("config is for '" + fc + "' but the command is '" + cmd + "'");
    cmd = fc;
  }
  if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end())
    throw InvalidArgument(cmd.empty() ? "no command given (try --help)" : "unknown command '" + cmd + "'");

  Invocation inv;
  inv.command = cmd;
  inv.cfg = defaults(cmd);
  if (!file.is_null()) {
    check_schema(file, cmd);
    json f = file;
    f.erase("command");
    // Alternative parameter spellings replace their defaults.
    if (f.contains("params")) {
      if (f["params"].contains("Delta")) inv.cfg["params"].erase("delta_OM");
      if (f["params"].contains("kappa_C")) inv.cfg["params"].erase("Q_C");
      if (f["params"].contains("kappa_M")) inv.cfg["params"].erase("Q_M");
    }
    merge(inv.cfg, f);
  }
  for (const std::string& scope : {std::string(), cmd}) {
    if (!scope.empty() && !app.got_subcommand(cmd)) continue;
    for (const auto& [k, o] : opts[scope]) {
      if (o->count() == 0) continue;
      const json v = k.kind == Kind::Flag ? json(flags[scope][k.name])
                                          : parse_flag_value(k, text[scope][k.name]);
      if (k.block == "params") {
        if (k.name == "Delta") inv.cfg["params"].erase("delta_OM");
        if (k.name == "delta_OM") inv.cfg["params"].erase("Delta");
        if (k.name == "kappa_C") inv.cfg["params"].erase("Q_C");
        if (k.name == "Q_C") inv.cfg["params"].erase("kappa_C");
        if (k.name == "kappa_M") inv.cfg["params"].erase("Q_M");
        if (k.name == "Q_M") inv.cfg["params"].erase("kappa_M");
      }
      if (k.name == "threads") inv.threads_from_flag = true;
      slot(inv.cfg, k) = v;
    }
  }
  const json& p = inv.cfg["params"];
  if (p.contains("Delta") && p.contains("delta_OM"))
    throw InvalidArgument("give either Delta or delta_OM, not both");
  if (p.contains("kappa_C") && p.contains("Q_C"))
    throw InvalidArgument("give either kappa_C or Q_C, not both");
  if (p.contains("kappa_M") && p.contains("Q_M"))
    throw InvalidArgument("give either kappa_M or Q_M, not both");
  return inv;
}

int thread_setting(const Invocation& inv) {
  if (!inv.threads_from_flag)
    if (const char* env = std::getenv("CPL_THREADS")) {
      try {
        const int n = std::stoi(env);
        if (n > 0) return n;
      } catch (const std::logic_error&) {
      }
      throw InvalidArgument("CPL_THREADS must be a positive integer");
    }
  if (inv.cfg.contains("threads")) {
    const long n = inv.cfg["threads"].get<long>();
    if (n < 1) throw InvalidArgument("threads must be positive");
    return static_cast<int>(n);
  }
  return thread_count();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  Invocation inv;
  OmParams params;
  int threads = 1;
  try {
    int early = -1;
    inv = parse(args, out, early);
    if (early >= 0) return early;
    threads = thread_setting(inv);
    params = resolve_params(inv.cfg.at("params"));
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  set_threads(threads);

  Artifacts a;
  try {
    const std::string& cmd = inv.command;
    if (cmd == "bands") a = cmd_bands(inv.cfg, params);
    else if (cmd == "chern") a = cmd_chern(inv.cfg, params);
    else if (cmd == "gapmap") a = cmd_gapmap(inv.cfg, params);
    else if (cmd == "stripe") a = cmd_stripe(inv.cfg, params);
    else if (cmd == "transfer") a = cmd_transfer(inv.cfg);
    else if (cmd == "disorder") a = cmd_disorder(inv.cfg);
    else a = cmd_stability(params);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    const fs::path dir = inv.cfg.at("output_dir").get<std::string>();
    fs::create_directories(dir);
    json outputs = json::array();
    for (const auto& [name, body] : a.text) {
      std::ofstream f(dir / name);
      if (!f) throw InvalidArgument("cannot write " + (dir / name).string());
      f << body;
      outputs.push_back(name);
    }
    json manifest = {{"command", inv.command},
                     {"config", inv.cfg},
                     {"code_version", code_version()},
                     {"started_utc", utc_now()},
                     {"wall_time_s", wall},
                     {"threads", threads},
                     {"scenario_hash", hex64(scenario_hash(inv.cfg))},
                     {"outputs", outputs}};
    write_json(dir / "manifest.json", manifest);
    out << a.summary.dump() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace omk
