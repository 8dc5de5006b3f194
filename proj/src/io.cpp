#include "field_econ/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace field_econ {

namespace {

ParamIssue type_issue(const std::string& name, const std::string& allowed) {
  ParamIssue is;
  is.kind = ParamIssue::Kind::kTypeError;
  is.name = name;
  is.allowed = allowed;
  return is;
}

ParamIssue range_issue(const std::string& name, double v, const std::string& allowed) {
  ParamIssue is;
  is.kind = ParamIssue::Kind::kRangeViolation;
  is.name = name;
  is.value = v;
  is.allowed = allowed;
  return is;
}

class Reader {
 public:
  explicit Reader(const nlohmann::json& j) : j_(j) {}

  void number(const char* key, double& out, double lo, bool lo_open = false) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) {
      issues_.push_back(type_issue(key, "number"));
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (lo_open ? !(x > lo) : !(x >= lo))) {
      issues_.push_back(range_issue(key, x, std::string(lo_open ? "> " : ">= ") + format_double(lo)));
      return;
    }
    out = x;
  }

  template <class Int>
  void integer(const char* key, Int& out, long long lo) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) {
      issues_.push_back(type_issue(key, "integer"));
      return;
    }
    const long long x = v.get<long long>();
    if (x < lo) {
      issues_.push_back(range_issue(key, static_cast<double>(x), ">= " + std::to_string(lo)));
      return;
    }
    out = static_cast<Int>(x);
  }

  void boolean(const char* key, bool& out) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) {
      issues_.push_back(type_issue(key, "boolean"));
      return;
    }
    out = v.get<bool>();
  }

  template <class E>
  void choice(const char* key, E& out, const std::map<std::string, E>& options) {
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    std::string allowed;
    for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + name;
    if (!v.is_string()) {
      issues_.push_back(type_issue(key, allowed));
      return;
    }
    const auto it = options.find(v.get<std::string>());
    if (it == options.end()) {
      ParamIssue is = type_issue(key, allowed);
      is.kind = ParamIssue::Kind::kRangeViolation;
      issues_.push_back(is);
      return;
    }
    out = it->second;
  }

  void finish() const {
    if (!issues_.empty()) throw ParamError(issues_);
  }

 private:
  const nlohmann::json& j_;
  std::vector<ParamIssue> issues_;
};

const std::map<std::string, RhoVariant>& variant_options() {
  static const std::map<std::string, RhoVariant> m = {{"simple", RhoVariant::kSimple},
                                                      {"main_text", RhoVariant::kMainText},
                                                      {"appendix", RhoVariant::kAppendix}};
  return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

RhoVariant parse_rho_variant(const std::string& s) {
  const auto it = variant_options().find(s);
  if (it == variant_options().end()) {
    throw ModelError(ErrorCode::kInvalidArgument, "unknown rho variant '" + s + "'");
  }
  return it->second;
}

SimConfig sim_config_from_json(const nlohmann::json& cfg, SimConfig base) {
  Reader r(cfg);
  r.integer("n_agents", base.n_agents, 1);
  r.integer("n_steps", base.n_steps, 0);
  r.integer("seed", base.seed, 0);
  r.integer("stride", base.stride, 1);
  r.choice("init", base.init,
           std::map<std::string, InitMode>{{"constant", InitMode::kConstant},
                                           {"field_mean", InitMode::kFieldMean}});
  r.number("initial_capital", base.initial_capital, 0.0, true);
  r.number("initial_log_spread", base.initial_log_spread, 0.0);
  r.number("initial_x_range", base.initial_x_range, 0.0);
  if (base.initial_x_range > 1.0) base.initial_x_range = 1.0;
  r.choice("mean_capital", base.mean_capital,
           std::map<std::string, MeanCapitalMode>{{"analytic", MeanCapitalMode::kAnalytic},
                                                  {"empirical", MeanCapitalMode::kEmpirical}});
  r.choice("rho_variant", base.rho_variant, variant_options());
  r.number("price_tol", base.price_tol, 0.0, true);
  r.integer("price_max_iter", base.price_max_iter, 1);
  r.finish();
  return base;
}

McConfig mc_config_from_json(const nlohmann::json& cfg, McConfig base) {
  base.sim = sim_config_from_json(cfg, base.sim);
  Reader r(cfg);
  r.integer("n_seeds", base.n_seeds, 1);
  r.integer("base_seed", base.base_seed, 0);
  r.integer("threads_outer", base.threads_outer, 1);
  r.number("pass_fraction", base.pass_fraction, 0.0);
  r.number("spearman_threshold", base.spearman_threshold, -1.0);
  r.number("slope_tolerance", base.slope_tolerance, 0.0);
  r.boolean("check_d_ordering", base.check_d_ordering);
  r.number("d_alt", base.d_alt, 0.0, true);
  r.number("cohort_high", base.cohort_high, 0.0);
  r.number("cohort_low", base.cohort_low, 0.0);
  r.number("gap_threshold", base.gap_threshold, -1.0);
  r.number("matched_kappa1", base.matched_kappa1, 0.0);
  if (cfg.contains("matched_kappa2")) r.number("matched_kappa2", base.matched_kappa2, 0.0);
  r.finish();
  return base;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "t,i,K,X,P\n";
  for (const Ensemble& e : traj.snapshots) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      const AgentState& a = e.agents[i];
      os << e.t << ',' << i << ',' << format_double(a.K) << ',' << format_double(a.X) << ','
         << format_double(a.P) << '\n';
    }
  }
}

nlohmann::json trajectory_summary(const Trajectory& traj) {
  nlohmann::json j;
  j["seed"] = traj.seed;
  j["params"] = params_to_json(traj.params);
  j["n_agents"] = traj.snapshots.empty() ? 0 : traj.snapshots.front().size();
  j["n_steps"] = traj.diagnostics.size();
  std::vector<long> snaps;
  for (const Ensemble& e : traj.snapshots) snaps.push_back(e.t);
  j["snapshot_steps"] = snaps;
  nlohmann::json d = nlohmann::json::object();
  std::vector<long> t;
  std::vector<double> mk, mx, res, rel;
  std::vector<int> it;
  for (const StepDiagnostics& s : traj.diagnostics) {
    t.push_back(s.t);
    mk.push_back(s.mean_K);
    mx.push_back(s.mean_abs_X);
    res.push_back(s.residual_norm);
    rel.push_back(s.relative_residual);
    it.push_back(s.iterations);
  }
  d["t"] = t;
  d["mean_K"] = mk;
  d["mean_abs_X"] = mx;
  d["residual_norm"] = res;
  d["relative_residual"] = rel;
  d["newton_iterations"] = it;
  j["diagnostics"] = d;
  return j;
}

nlohmann::json field_to_json(const FieldSolution& f) {
  nlohmann::json j;
  j["phase"] = f.phase.nontrivial() ? "non-trivial" : "trivial";
  j["discriminant"] = f.phase.discriminant;
  j["rho_variant"] = variant_name(f.variant);
  j["rho_sq"] = f.rho_sq;
  j["h_bar"] = f.h_bar;
  j["h"] = f.h;
  j["kappa_bar"] = f.kappa_bar;
  j["D"] = f.D;
  j["u_avg"] = f.u_avg;
  j["u_omega"] = f.u_omega;
  j["omega"] = f.omega;
  j["mean_capital_at_0"] = mean_capital(0.0, f.params, f);
  j["params"] = params_to_json(f.params);
  return j;
}

void write_field_grids(const FieldSolution& f, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir));
  const ModelParams& p = f.params;
  {
    std::ofstream os(fs::path(dir) / "profile_X.csv");
    os << "X,f,mean_K,P_at_mean_K\n";
    for (double X : linspace(-1.0, 1.0, 101)) {
      const double mk = mean_capital(X, p, f);
      os << format_double(X) << ',' << format_double(f_of_X(X, p, f)) << ','
         << format_double(mk) << ',' << format_double(price_surface(mk, X, p, f)) << '\n';
    }
  }
  {
    std::ofstream os(fs::path(dir) / "price_K.csv");
    os << "X,K_over_mean_K,K,P\n";
    for (double X : {0.0, 0.5, 1.0}) {
      const double mk = mean_capital(X, p, f);
      for (int k = 0; k <= 40; ++k) {
        const double ratio = std::pow(10.0, -2.0 + 4.0 * k / 40.0);
        const double K = ratio * mk;
        os << format_double(X) << ',' << format_double(ratio) << ',' << format_double(K) << ','
           << format_double(price_surface(K, X, p, f)) << '\n';
      }
    }
  }
}

void write_sweep_csv(const SweepGrid& grid, std::ostream& os) {
  for (const SweepAxis& a : grid.axes) os << csv_field(a.name) << ',';
  os << "phase,discriminant,rho_sq,h,D,boundary,error\n";
  for (const SweepCell& c : grid.cells) {
    for (double v : c.coords) os << format_double(v) << ',';
    os << (c.phase.nontrivial() ? "non-trivial" : "trivial") << ','
       << format_double(c.phase.discriminant) << ',' << format_double(c.rho_sq) << ','
       << format_double(c.h) << ',' << format_double(c.D) << ',' << (c.boundary ? 1 : 0) << ','
       << csv_field(c.error) << '\n';
  }
}

std::vector<KernelQuery> read_queries_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) {
    throw ModelError(ErrorCode::kInvalidArgument, "query CSV is empty");
  }
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> want = {"K", "K_prime", "X", "X_prime", "theta", "theta_prime"};
  std::vector<int> col(want.size(), -1);
  for (std::size_t w = 0; w < want.size(); ++w) {
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == want[w]) col[w] = static_cast<int>(h);
    }
    if (col[w] < 0) {
      throw ModelError(ErrorCode::kInvalidArgument, "query CSV lacks column " + want[w]);
    }
  }
  std::vector<KernelQuery> out;
  long row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    double v[6];
    for (std::size_t w = 0; w < want.size(); ++w) {
      const std::size_t c = static_cast<std::size_t>(col[w]);
      try {
        if (c >= f.size()) throw std::invalid_argument("missing");
        v[w] = std::stod(f[c]);
      } catch (const std::exception&) {
        throw ModelError(ErrorCode::kInvalidArgument,
                         "query CSV row " + std::to_string(row) + ": bad value for " + want[w]);
      }
    }
    out.push_back(KernelQuery{v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return out;
}

void write_kernel_csv(const std::vector<KernelQuery>& queries,
                      const std::vector<TransitionValue>& values, std::ostream& os) {
  os << "K,K_prime,X,X_prime,theta,theta_prime,density,log_density,P,P_prime\n";
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const KernelQuery& q = queries[i];
    const TransitionValue& v = values[i];
    os << format_double(q.K) << ',' << format_double(q.K_prime) << ',' << format_double(q.X)
       << ',' << format_double(q.X_prime) << ',' << format_double(q.theta) << ','
       << format_double(q.theta_prime) << ',' << format_double(v.density) << ','
       << format_double(v.log_density) << ',' << format_double(v.P) << ','
       << format_double(v.P_prime) << '\n';
  }
}

}  // namespace field_econ
