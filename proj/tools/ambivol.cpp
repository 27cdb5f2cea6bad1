// ambivol <command> --config <file> [--seed N] [--out DIR] [--format csv|json] [module flags]
//
// Exit status: 0 success, 1 invalid configuration, 2 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ambivol/ambivol.hpp"

namespace fs = std::filesystem;
using namespace ambivol;

namespace {

constexpr int kSchemaVersion = 1;
const std::set<std::string> kCommands = {"price", "utility", "equilibrium", "simulate", "demo-dc"};

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  // price
  std::optional<std::string> direction;
  std::optional<std::size_t> paths;
  std::vector<std::string> family;
  std::optional<double> strike;
  // equilibrium
  std::optional<double> alpha, rho, beta, se, gamma_lo, gamma_hi;
};

struct RunConfig {
  std::string command;
  json problem = json::object();
  std::uint64_t seed = 42;
  fs::path output_dir = "ambivol_out";
  std::string format = "json";
};

// Reads key from an object holding only allowed keys, with a default.
template <class T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key) || j.at(key).is_null()) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config key '") + key + "' has the wrong type");
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RunConfig load_config(const std::string& command, const Overrides& ov) {
  RunConfig cfg;
  cfg.command = command;
  if (!ov.config.empty()) {
    std::ifstream in(ov.config);
    if (!in) throw InvalidArgument("cannot open config file " + ov.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw InvalidArgument("config file " + ov.config + ": " + e.what());
    }
    detail::reject_unknown_keys(j, {"schema_version", "command", "problem", "seed", "output_dir", "format"}, "config");
    if (get_or<int>(j, "schema_version", -1) != kSchemaVersion) {
      throw InvalidArgument("config schema_version must be " + std::to_string(kSchemaVersion));
    }
    const auto cmd = get_or<std::string>(j, "command", command);
    if (cmd != command) throw InvalidArgument("config is for command '" + cmd + "', not '" + command + "'");
    if (j.contains("problem")) cfg.problem = j.at("problem");
    if (!cfg.problem.is_object()) throw InvalidArgument("config problem must be an object");
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir.string());
    cfg.format = get_or<std::string>(j, "format", cfg.format);
  }
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.out) cfg.output_dir = *ov.out;
  if (ov.format) cfg.format = *ov.format;
  if (cfg.format != "json" && cfg.format != "csv") throw InvalidArgument("format must be csv or json");

  auto& p = cfg.problem;
  auto set = [&p](const char* key, const auto& v) {
    if (v) p[key] = *v;
  };
  set("direction", ov.direction);
  set("paths", ov.paths);
  if (!ov.family.empty()) p["family"] = ov.family;
  set("strike", ov.strike);
  set("alpha", ov.alpha);
  set("rho", ov.rho);
  set("beta", ov.beta);
  set("s_e", ov.se);
  set("gamma_lo", ov.gamma_lo);
  set("gamma_hi", ov.gamma_hi);
  return cfg;
}

// Collects artifacts; every path is relative to the output directory.
class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& name) {
    fs::create_directories(dir_);
    std::ofstream os(dir_ / name);
    if (!os) throw InvalidArgument("cannot write " + (dir_ / name).string());
    os.precision(17);
    files_.push_back(name);
    return os;
  }
  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_kv_csv(std::ostream& os, const json& flat) {
  os << "key,value\n";
  for (const auto& [k, v] : flat.items()) os << k << ',' << v.dump() << '\n';
}

// ---------------------------------------------------------------- price

std::function<double(double)> payoff_from(const json& j) {
  detail::reject_unknown_keys(j, {"type", "strike", "width"}, "payoff");
  const auto type = get_or<std::string>(j, "type", "call");
  const double K = get_or(j, "strike", 100.0), w = get_or(j, "width", 10.0);
  if (!(K > 0.0) || !(w > 0.0)) throw InvalidArgument("payoff strike and width must be positive");
  if (type == "call") return [K](double S) { return std::max(S - K, 0.0); };
  if (type == "put") return [K](double S) { return std::max(K - S, 0.0); };
  if (type == "straddle") return [K](double S) { return std::abs(S - K); };
  if (type == "digital") return [K](double S) { return S > K ? 1.0 : 0.0; };
  if (type == "butterfly") {
    return [K, w](double S) {
      return std::max(S - K + w, 0.0) - 2.0 * std::max(S - K, 0.0) + std::max(S - K - w, 0.0);
    };
  }
  throw InvalidArgument("unknown payoff type '" + type + "'");
}

int run_price(const RunConfig& cfg, Output& out) {
  const json& p = cfg.problem;
  detail::reject_unknown_keys(p,
                              {"payoff", "s0", "r", "T", "gamma_lo", "gamma_hi", "n_space", "n_time", "scheme",
                               "direction", "surface", "paths", "family", "b_coef", "strike"},
                              "price problem");
  json payoff = get_or(p, "payoff", json::object());
  if (p.contains("strike")) payoff["strike"] = p.at("strike");
  BSBProblem pb;
  pb.payoff = payoff_from(payoff);
  pb.s0 = get_or(p, "s0", 100.0);
  pb.r = get_or(p, "r", 0.05);
  pb.T = get_or(p, "T", 1.0);
  pb.gamma = VolatilitySet::interval(get_or(p, "gamma_lo", 0.1), get_or(p, "gamma_hi", 0.3));
  pb.n_space = get_or<std::size_t>(p, "n_space", 400);
  pb.n_time = get_or<std::size_t>(p, "n_time", 400);
  const auto scheme = get_or<std::string>(p, "scheme", "crank_nicolson");
  if (scheme == "crank_nicolson") {
    pb.scheme = TimeScheme::crank_nicolson;
  } else if (scheme == "implicit") {
    pb.scheme = TimeScheme::implicit;
  } else if (scheme == "explicit") {
    pb.scheme = TimeScheme::explicit_euler;
  } else {
    throw InvalidArgument("unknown scheme '" + scheme + "'");
  }
  const auto direction = get_or<std::string>(p, "direction", "both");
  if (direction != "super" && direction != "sub" && direction != "both") {
    throw InvalidArgument("direction must be super, sub or both");
  }
  const bool surface = get_or(p, "surface", false);
  const auto family_files = get_or(p, "family", std::vector<std::string>{});
  const std::size_t paths = get_or<std::size_t>(p, "paths", 10000);
  const double b_coef = get_or(p, "b_coef", 0.0);
  pb.check();
  std::vector<ScenarioProcess> family;
  for (const auto& f : family_files) family.push_back(load_scenario(f));

  json res = {{"s0", pb.s0}, {"r", pb.r}, {"T", pb.T}, {"gamma", {pb.gamma.sigma_lo(), pb.gamma.sigma_hi()}}};
  std::vector<std::pair<std::string, HedgeDirection>> dirs;
  if (direction != "sub") dirs.emplace_back("super", HedgeDirection::superhedge);
  if (direction != "super") dirs.emplace_back("sub", HedgeDirection::subhedge);
  for (const auto& [name, dir] : dirs) {
    const auto s = solve_bsb(pb, dir);
    res[name] = s.value_at(0.0, pb.s0);
    if (surface) {
      auto os = out.open("surface_" + name + ".csv");
      write_surface_csv(os, s);
    }
  }
  if (!family.empty()) {
    auto market = example_market(pb.r, b_coef, pb.gamma, pb.s0);
    res["monte_carlo"] = hedge_bounds_mc(market, european(pb.payoff), family, paths, cfg.seed);
  }
  if (cfg.format == "json") {
    out.write_json("price.json", res);
  } else {
    auto os = out.open("price.csv");
    os << "direction,value\n";
    for (const auto& [name, dir] : dirs) os << name << ',' << res[name].get<double>() << '\n';
    if (res.contains("monte_carlo")) {
      auto mc = out.open("price_mc.csv");
      mc << "scenario,mean,std_error,max_abs_lambda\n";
      for (const auto& e : res["monte_carlo"]["per_scenario"]) {
        mc << e["scenario"] << ',' << e["mean"] << ',' << e["std_error"] << ',' << e["max_abs_lambda"] << '\n';
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------- utility

Aggregator aggregator_from(const json& j) {
  detail::reject_unknown_keys(j, {"kind", "beta", "alpha", "rho"}, "aggregator");
  const auto kind = get_or<std::string>(j, "kind", "standard");
  const double beta = get_or(j, "beta", 0.02), alpha = get_or(j, "alpha", -1.0);
  if (kind == "standard") return Aggregator::standard_power(beta, alpha);
  if (kind == "kreps_porteus") return Aggregator::kreps_porteus(beta, alpha, get_or(j, "rho", alpha));
  throw InvalidArgument("unknown aggregator kind '" + kind + "'");
}

Endowment endowment_from(const json& j) {
  detail::reject_unknown_keys(j, {"e0", "s_e", "log_linear"}, "endowment");
  Endowment e;
  e.e0 = get_or(j, "e0", 1.0);
  e.s_e = Vector::Constant(1, get_or(j, "s_e", 0.15));
  e.log_linear = get_or(j, "log_linear", true);
  e.check();
  return e;
}

int run_utility(const RunConfig& cfg, Output& out) {
  const json& p = cfg.problem;
  detail::reject_unknown_keys(p, {"T", "n_steps", "sigma_lo", "sigma_hi", "step_sigma", "aggregator", "endowment"},
                              "utility problem");
  const TrinomialLattice lat(get_or(p, "T", 1.0), get_or<std::size_t>(p, "n_steps", 200), get_or(p, "sigma_lo", 0.1),
                             get_or(p, "sigma_hi", 0.3), get_or(p, "step_sigma", 0.0));
  const Aggregator agg = aggregator_from(get_or(p, "aggregator", json::object()));
  const Endowment e = endowment_from(get_or(p, "endowment", json::object()));
  const ConsumptionPlan plan = e.plan(lat);
  const auto lower = solve_recursive_utility(lat, plan, agg, Direction::lower);
  const auto upper = solve_recursive_utility(lat, plan, agg, Direction::upper);
  const json res = {{"V0_lower", lower.value.root()},
                    {"V0_upper", upper.value.root()},
                    {"root_p_mid_lower", lower.p_mid.root()},
                    {"n_steps", lat.n_steps()},
                    {"h", lat.h()}};
  if (cfg.format == "json") {
    out.write_json("utility.json", res);
  } else {
    auto os = out.open("utility.csv");
    write_kv_csv(os, res);
    auto nodes = out.open("utility_nodes.csv");
    write_node_csv(nodes, lower.value);
  }
  return 0;
}

// ---------------------------------------------------------------- equilibrium

int run_equilibrium(const RunConfig& cfg, Output& out) {
  const json& p = cfg.problem;
  detail::reject_unknown_keys(p,
                              {"T", "n_steps", "gamma_lo", "gamma_hi", "alpha", "rho", "beta", "e0", "s_e", "strike",
                               "n_scan"},
                              "equilibrium problem");
  const double alpha = get_or(p, "alpha", -1.0), beta = get_or(p, "beta", 0.02);
  const TrinomialLattice lat(get_or(p, "T", 1.0), get_or<std::size_t>(p, "n_steps", 400), get_or(p, "gamma_lo", 0.1),
                             get_or(p, "gamma_hi", 0.3));
  const Aggregator agg = p.contains("rho") && !p.at("rho").is_null()
                             ? Aggregator::kreps_porteus(beta, alpha, p.at("rho").get<double>())
                             : Aggregator::standard_power(beta, alpha);
  Endowment e;
  e.e0 = get_or(p, "e0", 1.0);
  e.s_e = Vector::Constant(1, get_or(p, "s_e", 0.15));
  e.check();
  std::optional<double> strike;
  if (p.contains("strike") && !p.at("strike").is_null()) strike = p.at("strike").get<double>();
  const auto n_scan = get_or<std::size_t>(p, "n_scan", 50);

  const auto rep = implied_vs_realized(lat, e, agg, strike, n_scan);
  if (cfg.format == "json") {
    out.write_json("equilibrium.json", rep);
  } else {
    const RatePremium rp = equilibrium_rate_and_premium(lat, e, agg);
    auto os = out.open("excess_returns.csv");
    os << "k,j,t,x,r,excess_return\n";
    for (std::size_t k = 0; k < lat.n_steps(); ++k) {
      const long kk = static_cast<long>(k);
      for (long j = -kk; j <= kk; ++j) {
        os << k << ',' << j << ',' << lat.time(k) << ',' << lat.x(j) << ',' << rp.r.at(k, j) << ','
           << rp.eta.at(k, j) << '\n';
      }
    }
    auto a = out.open("endowment_coefficient.csv");
    a << "t,A\n";
    for (std::size_t k = 0; k < rep.times.size(); ++k) a << rep.times[k] << ',' << rep.A[k] << '\n';
    auto summary = out.open("equilibrium.csv");
    json flat = rep;
    for (const char* key : {"times", "A", "riskless_rate", "excess_return", "option", "minimizer",
                            "realized_variance_range"}) {
      flat.erase(key);
    }
    flat["realized_variance_min"] = rep.realized_variance_min;
    flat["realized_variance_max"] = rep.realized_variance_max;
    flat["call_price"] = rep.option.call_price;
    flat["strike"] = rep.option.strike;
    flat["minimizer_passed"] = rep.minimizer.passed;
    write_kv_csv(summary, flat);
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

int run_simulate(const RunConfig& cfg, Output& out) {
  const json& p = cfg.problem;
  detail::reject_unknown_keys(p, {"scenario", "scenario_file", "paths", "write_paths"}, "simulate problem");
  if (p.contains("scenario") == p.contains("scenario_file")) {
    throw InvalidArgument("simulate needs exactly one of scenario and scenario_file");
  }
  const ScenarioProcess sc =
      p.contains("scenario") ? scenario_from_json(p.at("scenario")) : load_scenario(p.at("scenario_file").get<std::string>());
  const auto n_paths = get_or<std::size_t>(p, "paths", 1000);
  const auto write_paths = get_or<std::size_t>(p, "write_paths", 0);
  if (write_paths > n_paths) throw InvalidArgument("write_paths exceeds paths");

  const auto paths = simulate_scenario(sc, n_paths, cfg.seed);
  const double T = sc.horizon();
  std::vector<double> qv_T(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) qv_T[i] = realized_qv(paths[i]).qv.back().trace() / T;
  const auto st = sample_stats(qv_T);
  const json res = {{"paths", n_paths},
                    {"T", T},
                    {"steps", sc.steps()},
                    {"mean_qv_T_over_T", st.mean},
                    {"std_error", st.std_error}};
  if (cfg.format == "json") {
    json r = res;
    r["qv_T_over_T"] = qv_T;
    out.write_json("simulate.json", r);
  } else {
    auto os = out.open("qv.csv");
    os << "path,qv_T_over_T\n";
    for (std::size_t i = 0; i < n_paths; ++i) os << i << ',' << qv_T[i] << '\n';
    auto s = out.open("simulate.csv");
    write_kv_csv(s, res);
  }
  for (std::size_t i = 0; i < write_paths; ++i) {
    auto os = out.open("path_" + std::to_string(i) + ".csv");
    write_path_csv(os, paths[i]);
    auto q = out.open("qv_path_" + std::to_string(i) + ".csv");
    write_qv_csv(q, realized_qv(paths[i]));
  }
  return 0;
}

// ---------------------------------------------------------------- demo-dc

int run_demo_dc(const RunConfig& cfg, Output& out) {
  const json& p = cfg.problem;
  detail::reject_unknown_keys(p, {"T", "n_steps", "sigma_lo", "sigma_hi", "e0", "tau", "beta", "alpha"},
                              "demo-dc problem");
  const TrinomialLattice lat(get_or(p, "T", 1.0), get_or<std::size_t>(p, "n_steps", 100),
                             get_or(p, "sigma_lo", std::sqrt(0.8)), get_or(p, "sigma_hi", 1.0));
  const auto rep = demo_dynamic_consistency(lat, get_or(p, "e0", 1.0), get_or(p, "tau", 0.5),
                                            Aggregator::standard_power(get_or(p, "beta", 0.05), get_or(p, "alpha", -1.0)));
  const json res = {{"V0_gap", rep.V0_gap},
                    {"conditional_gap", rep.Vtau_gap_under_sigma_lo},
                    {"conditional_gap_all_middle", rep.Vtau_gap_all_middle},
                    {"phi", {rep.phi_at_sigma_lo_sq, rep.phi_at_midpoint, rep.phi_at_sigma_hi_sq}},
                    {"tolerance", rep.tolerance},
                    {"V0_e", rep.V0_e},
                    {"V0_c", rep.V0_c},
                    {"tau_layer", rep.tau_layer},
                    {"typical_middle_moves", rep.typical_middle_moves}};
  if (cfg.format == "json") {
    out.write_json("demo_dc.json", res);
  } else {
    auto os = out.open("demo_dc.csv");
    write_kv_csv(os, res);
  }
  return 0;
}

int run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Output out(cfg.output_dir);
  int status = 0;
  if (cfg.command == "price") status = run_price(cfg, out);
  if (cfg.command == "utility") status = run_utility(cfg, out);
  if (cfg.command == "equilibrium") status = run_equilibrium(cfg, out);
  if (cfg.command == "simulate") status = run_simulate(cfg, out);
  if (cfg.command == "demo-dc") status = run_demo_dc(cfg, out);

  const json effective = {{"schema_version", kSchemaVersion},
                          {"command", cfg.command},
                          {"problem", cfg.problem},
                          {"seed", cfg.seed},
                          {"format", cfg.format}};
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(effective.dump())));
  const json manifest = {{"config", effective},
                         {"config_hash_fnv1a", hash},
                         {"version", AMBIVOL_VERSION},
                         {"artifacts", out.files()},
                         {"wall_time_seconds",
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                         {"timestamp", stamp}};
  out.open("manifest.json") << manifest.dump(2) << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pricing and recursive utility under ambiguous volatility"};
  app.require_subcommand(1);
  Overrides ov;
  std::string command;

  for (const auto& name : kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", ov.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", ov.seed, "master seed");
    sub->add_option("--out", ov.out, "output directory");
    sub->add_option("--format", ov.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (name == "price") {
      sub->add_option("--direction", ov.direction, "super, sub or both")->check(CLI::IsMember({"super", "sub", "both"}));
      sub->add_option("--paths", ov.paths, "Monte Carlo paths per scenario");
      sub->add_option("--family", ov.family, "scenario files for Monte Carlo bounds");
      sub->add_option("--strike", ov.strike, "payoff strike");
    }
    if (name == "simulate") sub->add_option("--paths", ov.paths, "number of paths");
    if (name == "equilibrium") {
      sub->add_option("--alpha", ov.alpha, "risk exponent");
      sub->add_option("--rho", ov.rho, "intertemporal exponent (Kreps-Porteus when given)");
      sub->add_option("--beta", ov.beta, "discount rate");
      sub->add_option("--se", ov.se, "endowment volatility loading");
      sub->add_option("--gamma-lo", ov.gamma_lo, "lower volatility");
      sub->add_option("--gamma-hi", ov.gamma_hi, "upper volatility");
      sub->add_option("--strike", ov.strike, "call strike on the endowment (default at the money)");
    }
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return run(load_config(command, ov));
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const InvalidScenario& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const ConfigurationError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}
