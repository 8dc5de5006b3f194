#include "field_econ/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace field_econ {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void for_each_index(int n, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  tbb::task_arena arena(threads);
  arena.execute([&] { tbb::parallel_for(0, n, [&](int i) { fn(i); }); });
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

double mean_capital_of(const Ensemble& ens) {
  double s = 0.0;
  for (const AgentState& a : ens.agents) s += a.K;
  return s / static_cast<double>(ens.size());
}

std::string params_digest(const ModelParams& p) {
  const std::size_t h = std::hash<std::string>{}(params_to_json(p).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016zx", h);
  return buf;
}

nlohmann::json run_metadata(const ModelParams& p, const McConfig& mc) {
  nlohmann::json m;
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < mc.n_seeds; ++r) seeds.push_back(mc.base_seed + static_cast<std::uint64_t>(r));
  m["seeds"] = seeds;
  m["n_agents"] = mc.sim.n_agents;
  m["n_steps"] = mc.sim.n_steps;
  m["params_digest"] = params_digest(p);
  m["params"] = params_to_json(p);
  return m;
}

SimConfig replica_config(const McConfig& mc, int r) {
  SimConfig cfg = mc.sim;
  cfg.seed = mc.base_seed + static_cast<std::uint64_t>(r);
  cfg.stride = std::max<long>(1, cfg.n_steps);
  return cfg;
}

int count_true(const std::vector<int>& v) { return static_cast<int>(std::count(v.begin(), v.end(), 1)); }

}  // namespace

bool ValidationReport::all_passed() const {
  for (const CheckRecord& c : checks) {
    if (!c.reported_only && !c.passed) return false;
  }
  return true;
}

const CheckRecord* ValidationReport::find(const std::string& name) const {
  for (const CheckRecord& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json j;
  j["metadata"] = metadata;
  j["checks"] = nlohmann::json::array();
  for (const CheckRecord& c : checks) {
    nlohmann::json r;
    r["name"] = c.name;
    r["anchor"] = c.anchor;
    r["predicted"] = c.predicted;
    r["observed"] = c.observed;
    r["tolerance"] = c.tolerance;
    r["passed"] = c.passed;
    r["reported_only"] = c.reported_only;
    r["stats"] = c.stats;
    j["checks"].push_back(r);
  }
  j["all_passed"] = all_passed();
  return j;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return kNaN;
  return pearson(ranks(a), ranks(b));
}

std::pair<std::vector<double>, std::vector<double>> binned_mean_by_abs_x(const Ensemble& ens,
                                                                         int n_bins) {
  std::vector<double> sum(n_bins, 0.0), cnt(n_bins, 0.0);
  for (const AgentState& a : ens.agents) {
    const int b = std::clamp(static_cast<int>(std::fabs(a.X) * n_bins), 0, n_bins - 1);
    sum[b] += a.K;
    cnt[b] += 1.0;
  }
  std::vector<double> centre, mean;
  for (int b = 0; b < n_bins; ++b) {
    if (cnt[b] == 0.0) continue;
    centre.push_back((b + 0.5) / n_bins);
    mean.push_back(sum[b] / cnt[b]);
  }
  return {centre, mean};
}

double within_bin_price_slope(const Ensemble& ens, int n_bins) {
  std::vector<double> sx(n_bins, 0.0), sy(n_bins, 0.0), cnt(n_bins, 0.0);
  std::vector<int> bin(ens.size(), -1);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const AgentState& a = ens.agents[i];
    if (!(a.K > 0.0) || !(a.P > 0.0)) continue;
    const int b = std::clamp(static_cast<int>(std::floor((a.X + 1.0) * 0.5 * n_bins)), 0,
                             n_bins - 1);
    bin[i] = b;
    sx[b] += std::log(a.K);
    sy[b] += std::log(a.P);
    cnt[b] += 1.0;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const int b = bin[i];
    if (b < 0) continue;
    const double x = std::log(ens.agents[i].K) - sx[b] / cnt[b];
    const double y = std::log(ens.agents[i].P) - sy[b] / cnt[b];
    sxy += x * y;
    sxx += x * x;
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

ValidationReport validate_phase1(const ModelParams& p, const McConfig& mc) {
  const FieldSolution field = solve_field(p, mc.sim.rho_variant);
  if (field.phase.nontrivial()) {
    throw ModelError(ErrorCode::kWrongPhase, "validate_phase1 needs parameters in the trivial phase");
  }
  ModelParams p_alt = p;
  p_alt.d = mc.d_alt;

  const int n = mc.n_seeds;
  std::vector<double> rank_corr(n, kNaN), slope(n, kNaN), mean_k(n, kNaN), mean_k_alt(n, kNaN);
  for_each_index(n, mc.threads_outer, [&](int r) {
    const SimConfig cfg = replica_config(mc, r);
    const Trajectory traj = simulate(p, cfg);
    const Ensemble& last = traj.snapshots.back();
    const auto [centre, mean] = binned_mean_by_abs_x(last, 11);
    rank_corr[r] = spearman(centre, mean);
    slope[r] = within_bin_price_slope(last, 21);
    mean_k[r] = mean_capital_of(last);
    if (mc.check_d_ordering) {
      const Trajectory alt = simulate(p_alt, cfg);
      mean_k_alt[r] = mean_capital_of(alt.snapshots.back());
    }
  });

  ValidationReport rep;
  rep.metadata = run_metadata(p, mc);
  rep.metadata["phase"] = "trivial";

  {
    CheckRecord c;
    c.name = "capital_decreasing_in_abs_x";
    c.anchor = "agents at the centre have more opportunities to exchange and accumulate more";
    std::vector<int> ok(n);
    for (int r = 0; r < n; ++r) ok[r] = rank_corr[r] < mc.spearman_threshold ? 1 : 0;
    c.predicted = mc.pass_fraction;
    c.observed = static_cast<double>(count_true(ok)) / n;
    c.tolerance = mc.spearman_threshold;
    c.passed = c.observed >= mc.pass_fraction;
    c.stats["spearman_per_seed"] = rank_corr;
    c.stats["seeds_passing"] = count_true(ok);
    rep.checks.push_back(c);
  }
  {
    CheckRecord c;
    c.name = "price_capital_power_law";
    c.anchor = "P proportional to (K / <K>_X)^(-alpha/(1+gamma)) at fixed X";
    c.predicted = -p.alpha / (1.0 + p.gamma);
    c.observed = mean_of(slope);
    c.tolerance = mc.slope_tolerance;
    c.passed = std::fabs(c.observed - c.predicted) <= mc.slope_tolerance * std::fabs(c.predicted);
    c.stats["slope_per_seed"] = slope;
    rep.checks.push_back(c);
  }
  if (mc.check_d_ordering) {
    CheckRecord c;
    c.name = "capital_increasing_in_d";
    c.anchor = "capital accumulation is an increasing function of d";
    std::vector<int> ok(n);
    for (int r = 0; r < n; ++r) ok[r] = mean_k_alt[r] > mean_k[r] ? 1 : 0;
    c.predicted = mc.pass_fraction;
    c.observed = static_cast<double>(count_true(ok)) / n;
    c.passed = c.observed >= mc.pass_fraction;
    c.stats["d"] = p.d;
    c.stats["d_alt"] = mc.d_alt;
    c.stats["mean_K"] = mean_k;
    c.stats["mean_K_alt"] = mean_k_alt;
    rep.checks.push_back(c);
  }
  return rep;
}

ValidationReport validate_phase2(const ModelParams& p, const McConfig& mc) {
  const FieldSolution field = solve_field(p, mc.sim.rho_variant);
  if (!field.phase.nontrivial()) {
    throw ModelError(ErrorCode::kWrongPhase,
                     "validate_phase2 needs parameters in the non-trivial phase");
  }
  ModelParams pm = p;
  pm.kappa1 = mc.matched_kappa1;
  if (mc.matched_kappa2 >= 0.0) pm.kappa2 = mc.matched_kappa2;
  const FieldSolution field_m = solve_field(pm, mc.sim.rho_variant);
  if (field_m.phase.nontrivial()) {
    throw ModelError(ErrorCode::kInvalidArgument, "matched run is not in the trivial phase");
  }

  const int n = mc.n_seeds;
  std::vector<double> gap(n, kNaN), frac_high(n, kNaN), frac_low(n, kNaN);
  std::vector<double> rate2(n, kNaN), rate1(n, kNaN), rank_corr(n, kNaN);
  std::vector<double> n_high(n, 0.0), n_low(n, 0.0);
  for_each_index(n, mc.threads_outer, [&](int r) {
    const SimConfig cfg = replica_config(mc, r);
    BarrierCounter counter(p, field);
    const Trajectory traj = simulate(p, cfg, [&](const Ensemble& e) { counter.observe(e); });
    const Ensemble& first = traj.snapshots.front();
    const Ensemble& last = traj.snapshots.back();
    double hi = 0.0, hi_above = 0.0, lo = 0.0, lo_above = 0.0;
    std::vector<double> abs_x(last.size()), k0(last.size());
    for (std::size_t i = 0; i < last.size(); ++i) {
      const double ref0 = mean_capital(first.agents[i].X, p, field);
      const bool above = last.agents[i].K > mean_capital(last.agents[i].X, p, field);
      if (first.agents[i].K > mc.cohort_high * ref0) {
        hi += 1.0;
        hi_above += above ? 1.0 : 0.0;
      } else if (first.agents[i].K < mc.cohort_low * ref0) {
        lo += 1.0;
        lo_above += above ? 1.0 : 0.0;
      }
      abs_x[i] = std::fabs(last.agents[i].X);
      k0[i] = first.agents[i].K;
    }
    n_high[r] = hi;
    n_low[r] = lo;
    if (hi > 0.0 && lo > 0.0) {
      frac_high[r] = hi_above / hi;
      frac_low[r] = lo_above / lo;
      gap[r] = frac_high[r] - frac_low[r];
    }
    rate2[r] = counter.result().rate;
    rank_corr[r] = spearman(abs_x, k0);

    BarrierCounter counter_m(pm, field_m);
    simulate(pm, cfg, [&](const Ensemble& e) { counter_m.observe(e); });
    rate1[r] = counter_m.result().rate;
  });

  ValidationReport rep;
  rep.metadata = run_metadata(p, mc);
  rep.metadata["phase"] = "non-trivial";
  rep.metadata["rho_sq"] = field.rho_sq;
  rep.metadata["matched_params"] = params_to_json(pm);

  {
    CheckRecord c;
    c.name = "eviction_gap";
    c.anchor = "eviction from the centre of agents with low capital";
    std::vector<int> ok(n);
    for (int r = 0; r < n; ++r) ok[r] = gap[r] >= mc.gap_threshold ? 1 : 0;
    c.predicted = mc.pass_fraction;
    c.observed = static_cast<double>(count_true(ok)) / n;
    c.tolerance = mc.gap_threshold;
    c.passed = c.observed >= mc.pass_fraction;
    c.stats["gap_per_seed"] = gap;
    c.stats["frac_high_above"] = frac_high;
    c.stats["frac_low_above"] = frac_low;
    c.stats["n_high"] = n_high;
    c.stats["n_low"] = n_low;
    rep.checks.push_back(c);
  }
  {
    CheckRecord c;
    c.name = "barrier_crossing_rate";
    c.anchor = "the surface K = <K>_X acts as a wall between two sets of agents";
    c.predicted = mean_of(rate1);
    c.observed = mean_of(rate2);
    c.passed = c.observed < c.predicted;
    c.reported_only = p.chi1 == 0.0 && p.chi2 == 0.0;
    c.stats["rate_phase2_per_seed"] = rate2;
    c.stats["rate_matched_phase1_per_seed"] = rate1;
    rep.checks.push_back(c);
  }
  {
    CheckRecord c;
    c.name = "periphery_rank_correlation";
    c.anchor = "low-capital agents are pushed to the periphery";
    c.predicted = 0.0;
    c.observed = mean_of(rank_corr);
    c.passed = c.observed < 0.0;
    c.stats["spearman_abs_x_vs_K0_per_seed"] = rank_corr;
    rep.checks.push_back(c);
  }
  return rep;
}

void BarrierCounter::observe(const Ensemble& ens) {
  const std::size_t n = ens.size();
  if (n_obs_ == 0) {
    crossings_.assign(n, 0);
    initial_.assign(n, 0);
    last_.assign(n, 0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = ens.agents[i].K - mean_capital(ens.agents[i].X, p_, field_);
    const int s = (diff > 0.0) - (diff < 0.0);
    if (n_obs_ == 0) {
      initial_[i] = s;
      last_[i] = s;
      continue;
    }
    if (s != 0 && last_[i] != 0 && s != last_[i]) ++crossings_[i];
    if (s != 0) last_[i] = s;
  }
  ++n_obs_;
}

BarrierStats BarrierCounter::result() const {
  BarrierStats st;
  st.crossings = crossings_;
  st.initial_side = initial_;
  st.n_observations = n_obs_;
  const double steps = n_obs_ > 1 ? static_cast<double>(n_obs_ - 1) : 0.0;
  double total = 0.0, above = 0.0, below = 0.0, n_above = 0.0, n_below = 0.0;
  for (std::size_t i = 0; i < crossings_.size(); ++i) {
    total += static_cast<double>(crossings_[i]);
    if (initial_[i] > 0) {
      above += static_cast<double>(crossings_[i]);
      n_above += 1.0;
    } else if (initial_[i] < 0) {
      below += static_cast<double>(crossings_[i]);
      n_below += 1.0;
    }
  }
  if (steps > 0.0 && !crossings_.empty()) {
    st.rate = total / (static_cast<double>(crossings_.size()) * steps);
    st.rate_initially_above = n_above > 0.0 ? above / (n_above * steps) : 0.0;
    st.rate_initially_below = n_below > 0.0 ? below / (n_below * steps) : 0.0;
  }
  return st;
}

BarrierStats barrier_stats(const Trajectory& traj, const FieldSolution& field) {
  BarrierCounter counter(traj.params, field);
  for (const Ensemble& e : traj.snapshots) counter.observe(e);
  return counter.result();
}

std::vector<double> linspace(double start, double stop, int num) {
  std::vector<double> v;
  if (num <= 0) return v;
  if (num == 1) return {start};
  v.reserve(num);
  for (int i = 0; i < num; ++i) {
    v.push_back(start + (stop - start) * static_cast<double>(i) / (num - 1));
  }
  v.back() = stop;
  return v;
}

SweepGrid phase_diagram(const std::vector<SweepAxis>& axes, const ModelParams& base,
                        bool refined) {
  SweepGrid grid;
  grid.axes = axes;
  grid.refined = refined;
  std::vector<std::size_t> dims;
  std::size_t total = 1;
  for (const SweepAxis& a : axes) {
    if (a.values.empty()) continue;
    dims.push_back(a.values.size());
    total *= a.values.size();
  }
  std::vector<const SweepAxis*> live;
  for (const SweepAxis& a : axes) {
    if (!a.values.empty()) live.push_back(&a);
  }
  grid.axes.clear();
  for (const SweepAxis* a : live) grid.axes.push_back(*a);

  const RhoVariant variant = refined ? RhoVariant::kAppendix : RhoVariant::kSimple;
  grid.cells.resize(total);
  tbb::parallel_for(std::size_t{0}, total, [&](std::size_t idx) {
    SweepCell& cell = grid.cells[idx];
    ModelParams p = base;
    std::size_t rem = idx;
    cell.coords.assign(live.size(), 0.0);
    cell.phase.discriminant = kNaN;
    for (std::size_t a = live.size(); a-- > 0;) {
      const std::size_t k = rem % dims[a];
      rem /= dims[a];
      cell.coords[a] = live[a]->values[k];
      set_param(p, live[a]->name, cell.coords[a]);
    }
    try {
      cell.phase.discriminant = discriminant(p, variant);
      cell.phase.tag =
          cell.phase.discriminant > 0.0 ? PhaseTag::kNonTrivial : PhaseTag::kTrivial;
      const FieldSolution f =
          make_field(p, cell.phase, cell.phase.nontrivial() ? rho_squared(p, variant) : 0.0,
                     variant);
      cell.rho_sq = f.rho_sq;
      cell.h = f.h;
      cell.D = f.D;
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.h = kNaN;
      cell.D = kNaN;
    }
  });

  // Flag cells whose discriminant sign differs from a neighbour along any axis.
  std::vector<std::size_t> step(live.size(), 1);
  for (std::size_t a = live.size(); a-- > 1;) step[a - 1] = step[a] * dims[a];
  for (std::size_t idx = 0; idx < total; ++idx) {
    const double di = grid.cells[idx].phase.discriminant;
    for (std::size_t a = 0; a < live.size(); ++a) {
      const std::size_t k = (idx / step[a]) % dims[a];
      for (int dir : {-1, 1}) {
        if ((dir < 0 && k == 0) || (dir > 0 && k + 1 == dims[a])) continue;
        const std::size_t nb = dir < 0 ? idx - step[a] : idx + step[a];
        const double dn = grid.cells[nb].phase.discriminant;
        if (std::isfinite(di) && std::isfinite(dn) && ((di > 0.0) != (dn > 0.0))) {
          grid.cells[idx].boundary = true;
        }
      }
    }
  }
  return grid;
}

}  // namespace field_econ
