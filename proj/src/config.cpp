#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "diffwave/cli.hpp"
#include "diffwave/error.hpp"

namespace diffwave {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

ojson to_tree(const RunConfig& c) {
  ojson pairs = ojson::array();
  for (const auto& [a, b] : c.theta_pairs) pairs.push_back({a, b});
  const VerifySettings& v = c.verify;
  return ojson{
      {"theta_minus", c.theta_minus},
      {"theta_plus", c.theta_plus},
      {"kappa", c.kappa},
      {"epsilon", c.epsilon},
      {"t_end", c.t_end},
      {"t_samples", c.t_samples},
      {"n_cells", c.n_cells},
      {"eta0", c.eta0},
      {"delta_bar_sq", c.delta_bar_sq},
      {"epsilons", c.epsilons},
      {"theta_pairs", pairs},
      {"grid_policy", c.grid_policy},
      {"t_ref", c.t_ref},
      {"fit_window", {c.fit_t_lo, c.fit_t_hi}},
      {"profile",
       {{"eta_max", c.profile.eta_max}, {"n_nodes", c.profile.n_nodes}, {"tol", c.profile.tol}}},
      {"solver",
       {{"cfl", c.solver.cfl},
        {"conduction", to_string(c.solver.conduction)},
        {"bc", to_string(c.solver.bc)},
        {"limiter", to_string(c.solver.limiter)}}},
      {"verify",
       {{"n_cells", v.n_cells},
        {"half_width", v.half_width},
        {"t_check", v.t_check},
        {"h_coarse", v.h_coarse},
        {"min_order", v.min_order},
        {"systems_tau0", v.systems_tau0},
        {"systems_min_order", v.systems_min_order},
        {"equivalence_steps", v.equivalence_steps},
        {"equivalence_epsilons", v.equivalence_epsilons},
        {"equivalence_tol", v.equivalence_tol},
        {"conservation_t_end", v.conservation_t_end},
        {"conservation_tol", v.conservation_tol}}},
      {"output_dir", c.output_dir},
      {"verbosity", c.verbosity},
  };
}

const char* kind(const ojson& j) {
  if (j.is_object()) return "object";
  if (j.is_array()) return "array";
  if (j.is_string()) return "string";
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  return "null";
}

// Overwrites `dst` with `src`, refusing keys and types absent from `dst`.
void merge(ojson& dst, const ojson& src, const std::string& path) {
  if (dst.is_object()) {
    if (!src.is_object()) {
      throw ValidationError(fmt::format("{}: expected an object, got {}",
                                        path.empty() ? "<root>" : path, kind(src)));
    }
    for (auto it = src.begin(); it != src.end(); ++it) {
      const std::string key = path.empty() ? it.key() : path + "." + it.key();
      if (!dst.contains(it.key())) throw ValidationError(fmt::format("unknown key '{}'", key));
      merge(dst[it.key()], it.value(), key);
    }
    return;
  }
  const bool ok = (dst.is_number() && src.is_number()) || (dst.is_string() && src.is_string()) ||
                  (dst.is_array() && src.is_array()) || (dst.is_boolean() && src.is_boolean());
  if (!ok) throw ValidationError(fmt::format("{}: expected {}, got {}", path, kind(dst), kind(src)));
  dst = src;
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

ojson parse_json(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}: {}", what, location(text, e.byte), e.what()), e.byte);
  }
}

void apply_override(ojson& tree, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError(fmt::format("override '{}' is not of the form key=value", item));
  }
  const std::string key = item.substr(0, eq), text = item.substr(eq + 1);
  ojson value;
  try {
    value = ojson::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;  // bare word
  }
  ojson* node = &tree;
  std::string path;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    path += path.empty() ? part : "." + part;
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError(fmt::format("unknown key '{}'", path));
    }
    node = &(*node)[part];
  }
  merge(*node, value, key);
}

double number(const ojson& j, const std::string&) { return j.get<double>(); }

int integer(const ojson& j, const std::string& key) {
  if (!j.is_number_integer()) throw ValidationError(fmt::format("{}: expected an integer", key));
  return j.get<int>();
}

std::vector<double> numbers(const ojson& j, const std::string& key) {
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError(fmt::format("{}: expected an array of numbers", key));
    out.push_back(x.get<double>());
  }
  return out;
}

template <class F>
auto parse_enum(F f, const ojson& j, const std::string& key) {
  try {
    return f(j.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ValidationError(fmt::format("{}: {}", key, e.what()));
  }
}

RunConfig from_tree(const ojson& t, Command command) {
  RunConfig c;
  c.command = command;
  c.theta_minus = number(t["theta_minus"], "theta_minus");
  c.theta_plus = number(t["theta_plus"], "theta_plus");
  c.kappa = number(t["kappa"], "kappa");
  c.epsilon = number(t["epsilon"], "epsilon");
  c.t_end = number(t["t_end"], "t_end");
  c.t_samples = numbers(t["t_samples"], "t_samples");
  c.n_cells = integer(t["n_cells"], "n_cells");
  c.eta0 = number(t["eta0"], "eta0");
  c.delta_bar_sq = number(t["delta_bar_sq"], "delta_bar_sq");
  c.epsilons = numbers(t["epsilons"], "epsilons");
  for (const auto& p : t["theta_pairs"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ValidationError("theta_pairs: expected [[theta_minus, theta_plus], ...]");
    }
    c.theta_pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  c.grid_policy = t["grid_policy"].get<std::string>();
  c.t_ref = number(t["t_ref"], "t_ref");
  const auto w = numbers(t["fit_window"], "fit_window");
  if (w.size() != 2) throw ValidationError("fit_window: expected [t_lo, t_hi]");
  c.fit_t_lo = w[0];
  c.fit_t_hi = w[1];

  const ojson& p = t["profile"];
  c.profile.eta_max = number(p["eta_max"], "profile.eta_max");
  c.profile.n_nodes = integer(p["n_nodes"], "profile.n_nodes");
  c.profile.tol = number(p["tol"], "profile.tol");

  const ojson& s = t["solver"];
  c.solver.cfl = number(s["cfl"], "solver.cfl");
  c.solver.conduction = parse_enum(conduction_from_string, s["conduction"], "solver.conduction");
  c.solver.bc = parse_enum(boundary_from_string, s["bc"], "solver.bc");
  c.solver.limiter = parse_enum(limiter_from_string, s["limiter"], "solver.limiter");

  const ojson& v = t["verify"];
  VerifySettings& vs = c.verify;
  vs.n_cells = integer(v["n_cells"], "verify.n_cells");
  vs.half_width = number(v["half_width"], "verify.half_width");
  vs.t_check = number(v["t_check"], "verify.t_check");
  vs.h_coarse = number(v["h_coarse"], "verify.h_coarse");
  vs.min_order = number(v["min_order"], "verify.min_order");
  vs.systems_tau0 = number(v["systems_tau0"], "verify.systems_tau0");
  vs.systems_min_order = number(v["systems_min_order"], "verify.systems_min_order");
  vs.equivalence_steps = integer(v["equivalence_steps"], "verify.equivalence_steps");
  vs.equivalence_epsilons = numbers(v["equivalence_epsilons"], "verify.equivalence_epsilons");
  vs.equivalence_tol = number(v["equivalence_tol"], "verify.equivalence_tol");
  vs.conservation_t_end = number(v["conservation_t_end"], "verify.conservation_t_end");
  vs.conservation_tol = number(v["conservation_tol"], "verify.conservation_tol");

  c.output_dir = t["output_dir"].get<std::string>();
  c.verbosity = integer(t["verbosity"], "verbosity");
  return c;
}

void require(bool ok, const std::string& key, const std::string& range, double value) {
  if (!ok) throw ValidationError(fmt::format("{} = {} outside {}", key, value, range));
}

void require_eps(double e, const std::string& key) {
  require(e > 0.0 && e <= 0.5, key, "(0, 0.5]", e);
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Profile: return "profile";
    case Command::Simulate: return "simulate";
    case Command::Sweep: return "sweep";
    case Command::Verify: return "verify";
    case Command::Report: return "report";
  }
  return "?";
}

Command command_from_string(const std::string& s) {
  for (Command c : {Command::Profile, Command::Simulate, Command::Sweep, Command::Verify,
                    Command::Report}) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError(fmt::format("unknown command '{}'", s));
}

ProfileParams RunConfig::profile_params() const {
  ProfileParams p = profile;
  p.theta_minus = theta_minus;
  p.theta_plus = theta_plus;
  p.kappa = kappa;
  return p;
}

CaseSpec RunConfig::case_spec() const {
  CaseSpec c;
  c.epsilon = epsilon;
  c.theta_minus = theta_minus;
  c.theta_plus = theta_plus;
  c.kappa = kappa;
  c.t_end = t_end;
  c.t_samples = t_samples;
  c.n_cells = n_cells;
  c.solver = solver;
  c.profile = profile;
  c.creep_eta0 = theta_plus > theta_minus ? eta0 : 0.0;
  c.delta_bar_sq = delta_bar_sq;
  return c;
}

SweepConfig RunConfig::sweep_config() const {
  SweepConfig s;
  s.epsilons = epsilons;
  s.theta_pairs = theta_pairs;
  if (s.theta_pairs.empty()) s.theta_pairs = {{theta_minus, theta_plus}};
  s.kappa = kappa;
  s.t_end = t_end;
  s.t_samples = t_samples;
  s.grid_policy = grid_policy;
  s.n_cells = n_cells;
  s.eta0 = eta0;
  s.t_ref = t_ref;
  s.fit_t_lo = fit_t_lo;
  s.fit_t_hi = fit_t_hi;
  s.delta_bar_sq = delta_bar_sq;
  s.solver = solver;
  s.profile = profile;
  return s;
}

RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides,
                       Command command) {
  ojson tree = to_tree(RunConfig{});
  merge(tree, parse_json(json_text, "config"), "");
  for (const auto& o : overrides) apply_override(tree, o);
  RunConfig c = from_tree(tree, command);
  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      Command command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, command);
}

void validate_config(const RunConfig& c) {
  require(c.theta_minus > 0.0, "theta_minus", "(0, inf)", c.theta_minus);
  require(c.theta_plus > 0.0, "theta_plus", "(0, inf)", c.theta_plus);
  require(c.kappa > 0.0, "kappa", "(0, inf)", c.kappa);
  require_eps(c.epsilon, "epsilon");
  require(c.t_end > 0.0, "t_end", "(0, inf)", c.t_end);
  if (c.t_samples.empty()) throw ValidationError("t_samples: needs at least one time");
  for (double t : c.t_samples) require(t >= 0.0 && t <= c.t_end, "t_samples", "[0, t_end]", t);
  require(c.n_cells >= 128, "n_cells", "[128, inf)", c.n_cells);
  require(c.eta0 > 0.0, "eta0", "(0, inf)", c.eta0);
  require(c.delta_bar_sq > 0.0, "delta_bar_sq", "(0, inf)", c.delta_bar_sq);
  if (c.epsilons.empty()) throw ValidationError("epsilons: needs at least one value");
  for (double e : c.epsilons) require_eps(e, "epsilons");
  for (const auto& [a, b] : c.theta_pairs) {
    require(a > 0.0, "theta_pairs", "(0, inf)", a);
    require(b > 0.0, "theta_pairs", "(0, inf)", b);
  }
  if (c.grid_policy != "standard") {
    throw ValidationError(fmt::format("grid_policy = '{}' is not 'standard'", c.grid_policy));
  }
  require(c.t_ref >= 0.0 && c.t_ref <= c.t_end, "t_ref", "[0, t_end]", c.t_ref);
  require(c.fit_t_lo >= 0.0 && c.fit_t_lo < c.fit_t_hi, "fit_window[0]", "[0, t_hi)", c.fit_t_lo);
  require(c.profile.eta_max > 0.0, "profile.eta_max", "(0, inf)", c.profile.eta_max);
  require(c.profile.n_nodes >= 16, "profile.n_nodes", "[16, inf)", c.profile.n_nodes);
  require(c.profile.tol > 0.0 && c.profile.tol < 1e-3, "profile.tol", "(0, 1e-3)", c.profile.tol);
  require(c.solver.cfl > 0.0 && c.solver.cfl <= 0.9, "solver.cfl", "(0, 0.9]", c.solver.cfl);

  const VerifySettings& v = c.verify;
  require(v.n_cells >= 128, "verify.n_cells", "[128, inf)", v.n_cells);
  require(v.half_width > 0.0, "verify.half_width", "(0, inf)", v.half_width);
  require(v.t_check >= 0.0, "verify.t_check", "[0, inf)", v.t_check);
  require(v.h_coarse > 0.0 && v.h_coarse < v.half_width, "verify.h_coarse", "(0, half_width)",
          v.h_coarse);
  require(v.systems_tau0 > 0.0, "verify.systems_tau0", "(0, inf)", v.systems_tau0);
  require(v.equivalence_steps >= 1, "verify.equivalence_steps", "[1, inf)", v.equivalence_steps);
  for (double e : v.equivalence_epsilons) require_eps(e, "verify.equivalence_epsilons");
  require(v.equivalence_tol > 0.0, "verify.equivalence_tol", "(0, inf)", v.equivalence_tol);
  require(v.conservation_t_end > 0.0, "verify.conservation_t_end", "(0, inf)",
          v.conservation_t_end);
  require(v.conservation_tol > 0.0, "verify.conservation_tol", "(0, inf)", v.conservation_tol);
  require(c.verbosity >= 0 && c.verbosity <= 2, "verbosity", "[0, 2]", c.verbosity);

  if (c.output_dir.empty()) throw ValidationError("output_dir: must not be empty");
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec || !fs::is_directory(c.output_dir)) {
    throw ValidationError(fmt::format("output_dir '{}' cannot be created", c.output_dir));
  }
  const fs::path probe = fs::path(c.output_dir) / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw ValidationError(fmt::format("output_dir '{}' is not writable", c.output_dir));
  }
  fs::remove(probe, ec);
}

std::string config_to_json(const RunConfig& config) {
  return to_tree(config).dump(2) + "\n";
}

}  // namespace diffwave
