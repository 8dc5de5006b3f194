#include "field_econ/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace field_econ {

namespace {

constexpr std::uint32_t kPurposeStep = 0;
constexpr std::uint32_t kPurposeInit = 1;

template <class Fn>
void for_each_agent(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2048) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  tbb::task_arena arena(threads);
  arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, 1024),
                      [&](const tbb::blocked_range<std::size_t>& r) {
                        for (std::size_t i = r.begin(); i != r.end(); ++i) fn(i);
                      });
  });
}

}  // namespace

double potential_V1(double K_i, double K_j, double X_i, double X_j, double mean_K_i,
                    double mean_K_j, const ModelParams& p) {
  return -0.25 * p.kappa1 * (K_i / mean_K_i) * (K_j / mean_K_j) *
         std::exp(-p.chi1 * std::fabs(X_i - X_j));
}

double potential_V2(double X_i, double X_j, double X_k, const ModelParams& p) {
  const double dsum = std::fabs(X_i - X_j) + std::fabs(X_i - X_k) + std::fabs(X_j - X_k);
  return p.kappa2 / 6.0 * std::exp(-p.chi2 * dsum);
}

double potential_V0(double X, double mean_X, const ModelParams& p) {
  const double u = X - mean_X;
  return p.kappa0 / (2.0 * p.sigma_X * p.sigma_X) * u * u;
}

double propensity_profile(double X, const ModelParams& p) {
  const double v = 1.0 - std::cosh(std::fabs(X) / p.d) * std::exp(-1.0 / p.d);
  return v * v;
}

int EmpiricalMeanCapital::bin_of(double X) {
  const int b = static_cast<int>(std::floor((X + 1.0) * 0.5 * kBins));
  return std::clamp(b, 0, kBins - 1);
}

void EmpiricalMeanCapital::update(const std::vector<double>& capitals,
                                  const std::vector<double>& positions) {
  for (std::size_t i = 0; i < capitals.size(); ++i) {
    const int b = bin_of(positions[i]);
    sums_[b] += capitals[i];
    counts_[b] += 1.0;
    total_sum_ += capitals[i];
    total_count_ += 1.0;
  }
}

double EmpiricalMeanCapital::operator()(double X) const {
  if (total_count_ == 0.0) return 1.0;
  const double prior = total_sum_ / total_count_;
  const int b = bin_of(X);
  return (sums_[b] + prior) / (counts_[b] + 1.0);
}

std::vector<double> mean_capital_at(const std::vector<double>& positions, const ModelParams& p,
                                    const FieldSolution* field,
                                    const EmpiricalMeanCapital* empirical) {
  std::vector<double> out(positions.size(), 1.0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (field) {
      out[i] = mean_capital(positions[i], p, *field);
    } else if (empirical) {
      out[i] = (*empirical)(positions[i]);
    }
  }
  return out;
}

std::vector<ForceBreakdown> exchange_drifts(const std::vector<double>& capitals,
                                            const std::vector<double>& positions,
                                            const std::vector<double>& mean_K,
                                            const ModelParams& p, KernelMode mode) {
  const std::size_t n = positions.size();
  const double half_s2 = 0.5 * p.sigma_X * p.sigma_X;
  const double s = p.sum_scale(n);
  std::vector<ForceBreakdown> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].cohesion = -0.5 * p.kappa0 * positions[i];

  if (p.kappa1 > 0.0 && n > 1) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = capitals[i] / mean_K[i];
    const ExpKernel k1(positions, p.chi1, mode);
    const std::vector<double> signed_sum = k1.apply_signed(w);
    // dV1(i,j)/dX_i = (k1 chi1 / 4) w_i w_j sign(X_i - X_j) e^{-chi1 d_ij}
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = 0.25 * p.kappa1 * p.chi1 * w[i] * signed_sum[i] * s;
      out[i].attraction = -half_s2 * grad;
    }
  }
  if (p.kappa2 > 0.0 && n > 2) {
    const ExpKernel k2(positions, p.chi2, mode);
    const std::vector<double> trip = k2.triplet_gradient();
    // dV2(i,j,k)/dX_i = -chi2 (k2/6) (sign_ij + sign_ik) e^{-chi2 (d_ij+d_ik+d_jk)}
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = -p.chi2 * p.kappa2 / 6.0 * trip[i] * s * s;
      out[i].repulsion = -half_s2 * grad;
    }
  }
  return out;
}

ForceBreakdown exchange_drift(std::size_t i, const Ensemble& ens,
                              const std::vector<double>& mean_K, const ModelParams& p) {
  return exchange_drifts(ens.capitals(), ens.positions(), mean_K, p)[i];
}

double exchange_energy(const std::vector<double>& capitals, const std::vector<double>& positions,
                       const std::vector<double>& mean_K, const ModelParams& p) {
  const std::size_t n = positions.size();
  const double s = p.sum_scale(n);
  double e0 = 0.0, e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e0 += potential_V0(positions[i], 0.0, p);
    for (std::size_t j = i + 1; j < n; ++j) {
      e1 += potential_V1(capitals[i], capitals[j], positions[i], positions[j], mean_K[i],
                         mean_K[j], p);
      for (std::size_t k = j + 1; k < n; ++k) {
        e2 += potential_V2(positions[i], positions[j], positions[k], p);
      }
    }
  }
  return e0 + s * e1 + s * s * e2;
}

std::vector<double> capital_step(const Ensemble& ens, const std::vector<double>& prices,
                                 const ModelParams& p, const std::vector<double>& noise,
                                 KernelMode mode) {
  const ExpKernel w(ens.positions(), 1.0 / p.d, mode);
  const std::vector<double> capitals = ens.capitals();
  const std::vector<double> spend = spending(w, capitals, prices, p);
  std::vector<double> out(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double k = (1.0 - p.delta) * capitals[i] + income(capitals[i], prices[i], p) -
                     spend[i] + p.sigma * noise[i];
    out[i] = k > 0.0 ? k : 0.0;
  }
  return out;
}

double reflect_unit(double x) {
  if (x >= -1.0 && x <= 1.0) return x;
  // Odd by construction, so mirrored runs stay mirrored to the last bit.
  if (x < 0.0) return -reflect_unit(-x);
  // Reflection at +-1 is periodic with period 4.
  const double y = std::fmod(x + 1.0, 4.0);
  return y <= 2.0 ? y - 1.0 : 3.0 - y;
}

std::vector<double> exchange_step(const Ensemble& ens, const std::vector<ForceBreakdown>& drift,
                                  const ModelParams& p, const std::vector<double>& noise) {
  std::vector<double> out(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    out[i] = reflect_unit(ens.agents[i].X + drift[i].total() + p.sigma_X * noise[i]);
  }
  return out;
}

Ensemble initial_ensemble(const ModelParams& p, const SimConfig& cfg,
                          const FieldSolution* field) {
  if (cfg.n_agents == 0) {
    throw ModelError(ErrorCode::kInvalidArgument, "n_agents must be at least 1");
  }
  const RngStreams rng = make_streams(cfg.seed, cfg.n_agents);
  Ensemble ens;
  ens.agents.resize(cfg.n_agents);
  for (std::size_t i = 0; i < cfg.n_agents; ++i) {
    const Substream s = rng.stream(i);
    const auto u = s.uniform_pair_at(0, kPurposeInit);
    const NormalPair z = s.normal_pair_at(1, kPurposeInit);
    AgentState& a = ens.agents[i];
    a.X = cfg.initial_x_range * (2.0 * u[0] - 1.0);
    double k0 = cfg.initial_capital;
    if (cfg.init == InitMode::kFieldMean) {
      if (!field) throw ModelError(ErrorCode::kInvalidArgument, "field-mean init needs a field");
      k0 = mean_capital(a.X, p, *field);
    }
    a.K = k0 * std::exp(cfg.initial_log_spread * z.first);
  }
  return ens;
}

std::vector<NormalPair> step_noise(const RngStreams& rng, std::size_t n, long t, int threads) {
  std::vector<NormalPair> out(n);
  for_each_agent(n, threads, [&](std::size_t i) {
    out[i] = rng.stream(i).normal_pair_at(static_cast<std::uint64_t>(t), kPurposeStep);
  });
  return out;
}

namespace {

PriceVector price_state(Ensemble& ens, const ModelParams& p, const StepContext& ctx,
                        const std::vector<double>* warm) {
  PriceSolveOptions opts;
  opts.tol = ctx.price_tol;
  opts.max_iter = ctx.price_max_iter;
  opts.mode = ctx.kernel;
  opts.initial = warm;
  PriceVector pv;
  try {
    pv = solve_prices(ens, p, opts);
  } catch (const ModelError& e) {
    if (e.code() != ErrorCode::kNoConvergence) throw;
    throw ModelError(e.code(), "step " + std::to_string(ens.t) + ": " + e.what());
  }
  for (std::size_t i = 0; i < ens.size(); ++i) ens.agents[i].P = pv.prices[i];
  return pv;
}

StepDiagnostics summarize(const Ensemble& ens, const PriceVector& pv) {
  StepDiagnostics d;
  d.t = ens.t;
  for (const AgentState& a : ens.agents) {
    d.mean_K += a.K;
    d.mean_abs_X += std::fabs(a.X);
  }
  d.mean_K /= static_cast<double>(ens.size());
  d.mean_abs_X /= static_cast<double>(ens.size());
  d.residual_norm = pv.residual_norm;
  d.relative_residual = pv.relative_residual;
  d.iterations = pv.iterations;
  return d;
}

}  // namespace

StepDiagnostics step(Ensemble& ens, const ModelParams& p, const StepContext& ctx,
                     const std::vector<NormalPair>& noise) {
  const std::size_t n = ens.size();
  std::vector<double> prices = ens.prices();
  bool priced = true;
  for (double v : prices) priced = priced && v > 0.0;
  if (!priced) {
    price_state(ens, p, ctx, nullptr);
    prices = ens.prices();
  }

  std::vector<double> zk(n), zx(n);
  for (std::size_t i = 0; i < n; ++i) {
    zk[i] = noise[i].first;
    zx[i] = noise[i].second;
  }
  const std::vector<double> new_k = capital_step(ens, prices, p, zk, ctx.kernel);
  for (std::size_t i = 0; i < n; ++i) ens.agents[i].K = new_k[i];

  const std::vector<double> positions = ens.positions();
  std::vector<ForceBreakdown> drift;
  if (p.kappa1 > 0.0) {
    const bool analytic = ctx.mean_capital == MeanCapitalMode::kAnalytic && ctx.field;
    if (!analytic && ctx.empirical) ctx.empirical->update(new_k, positions);
    const std::vector<double> mk =
        mean_capital_at(positions, p, analytic ? ctx.field : nullptr, ctx.empirical);
    drift = exchange_drifts(new_k, positions, mk, p, ctx.kernel);
  } else {
    drift = exchange_drifts(new_k, positions, std::vector<double>(n, 1.0), p, ctx.kernel);
  }
  const std::vector<double> new_x = exchange_step(ens, drift, p, zx);
  for (std::size_t i = 0; i < n; ++i) ens.agents[i].X = new_x[i];
  ens.t += 1;

  const PriceVector pv = price_state(ens, p, ctx, &prices);
  return summarize(ens, pv);
}

Trajectory simulate(const ModelParams& p, const SimConfig& cfg, const StepObserver& observer) {
  if (cfg.n_steps < 0) throw ModelError(ErrorCode::kInvalidArgument, "n_steps must be >= 0");
  const long stride = std::max<long>(1, cfg.stride);
  std::optional<FieldSolution> field;
  const bool need_field = cfg.init == InitMode::kFieldMean ||
                          (p.kappa1 > 0.0 && cfg.mean_capital == MeanCapitalMode::kAnalytic);
  if (need_field) field = solve_field(p, cfg.rho_variant);

  EmpiricalMeanCapital empirical;
  StepContext ctx;
  ctx.field = field ? &*field : nullptr;
  ctx.empirical = &empirical;
  ctx.mean_capital = cfg.mean_capital;
  ctx.price_tol = cfg.price_tol;
  ctx.price_max_iter = cfg.price_max_iter;
  ctx.kernel = cfg.kernel;
  ctx.threads = resolve_threads(cfg.threads);

  Trajectory traj;
  traj.seed = cfg.seed;
  traj.params = p;
  Ensemble ens = initial_ensemble(p, cfg, ctx.field);
  price_state(ens, p, ctx, nullptr);
  if (cfg.mean_capital == MeanCapitalMode::kEmpirical) {
    empirical.update(ens.capitals(), ens.positions());
  }
  traj.snapshots.push_back(ens);
  if (observer) observer(ens);

  const RngStreams rng = make_streams(cfg.seed, cfg.n_agents);
  traj.diagnostics.reserve(static_cast<std::size_t>(cfg.n_steps));
  for (long t = 0; t < cfg.n_steps; ++t) {
    const std::vector<NormalPair> noise = step_noise(rng, ens.size(), t, ctx.threads);
    traj.diagnostics.push_back(step(ens, p, ctx, noise));
    if (observer) observer(ens);
    if (ens.t % stride == 0 || t + 1 == cfg.n_steps) traj.snapshots.push_back(ens);
  }
  return traj;
}

Trajectory simulate(const ModelParams& p, std::size_t n_agents, long n_steps,
                    std::uint64_t seed, long stride) {
  SimConfig cfg;
  cfg.n_agents = n_agents;
  cfg.n_steps = n_steps;
  cfg.seed = seed;
  cfg.stride = stride;
  return simulate(p, cfg);
}

}  // namespace field_econ
