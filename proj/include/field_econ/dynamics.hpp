#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "field_econ/core.hpp"
#include "field_econ/exp_kernel.hpp"
#include "field_econ/field_solver.hpp"
#include "field_econ/market_clearing.hpp"

namespace field_econ {

struct ForceBreakdown {
  double cohesion = 0.0;
  double attraction = 0.0;
  double repulsion = 0.0;
  double total() const { return cohesion + attraction + repulsion; }
};

// -(k1/4) (K_i / <K>_{X_i}) (K_j / <K>_{X_j}) exp(-chi1 |X_i - X_j|)
double potential_V1(double K_i, double K_j, double X_i, double X_j, double mean_K_i,
                    double mean_K_j, const ModelParams& p);

// (k2/6) exp(-chi2 (d_ij + d_ik + d_jk))
double potential_V2(double X_i, double X_j, double X_k, const ModelParams& p);

// k0 / (2 sigma_X^2) (X - mean_X)^2
double potential_V0(double X, double mean_X, const ModelParams& p);

// (1 - cosh(|X|/d) e^{-1/d})^2
double propensity_profile(double X, const ModelParams& p);

// Running estimate of <K>_X from the simulated ensemble: 21 uniform bins on
// [-1, 1], cumulative over updates, each bin shrunk towards the overall mean
// with one pseudo-observation.
class EmpiricalMeanCapital {
 public:
  static constexpr int kBins = 21;

  void update(const std::vector<double>& capitals, const std::vector<double>& positions);
  double operator()(double X) const;
  bool empty() const { return total_count_ == 0; }

 private:
  static int bin_of(double X);
  double sums_[kBins] = {};
  double counts_[kBins] = {};
  double total_sum_ = 0.0;
  double total_count_ = 0.0;
};

enum class MeanCapitalMode { kAnalytic, kEmpirical };

// Per-agent <K>_{X_i} for the attraction potential.
std::vector<double> mean_capital_at(const std::vector<double>& positions,
                                    const ModelParams& p, const FieldSolution* field,
                                    const EmpiricalMeanCapital* empirical);

// Drift of every agent, -(sigma_X^2 / 2) dE/dX_i with
// E = sum_i V0(X_i) + sum_{i<j} V1(i,j) + sum_{i<j<k} V2(i,j,k).
// The capital ratios K/<K> are held fixed when differentiating, and
// d|x|/dx = sign(x) with sign(0) = 0. Under kMean the pair sum is scaled by
// 1/N and the triplet sum by 1/N^2. The cohesion centre is X = 0.
std::vector<ForceBreakdown> exchange_drifts(const std::vector<double>& capitals,
                                            const std::vector<double>& positions,
                                            const std::vector<double>& mean_K,
                                            const ModelParams& p,
                                            KernelMode mode = KernelMode::kAuto);

ForceBreakdown exchange_drift(std::size_t i, const Ensemble& ens,
                              const std::vector<double>& mean_K, const ModelParams& p);

// Total energy E used by exchange_drifts (same scaling), for checks.
double exchange_energy(const std::vector<double>& capitals, const std::vector<double>& positions,
                       const std::vector<double>& mean_K, const ModelParams& p);

// K_i <- max(0, (1-delta) K_i + Y_i - spending_i + sigma noise_i).
std::vector<double> capital_step(const Ensemble& ens, const std::vector<double>& prices,
                                 const ModelParams& p, const std::vector<double>& noise,
                                 KernelMode mode = KernelMode::kAuto);

// Mirror reflection into [-1, 1].
double reflect_unit(double x);

// X_i <- reflect(X_i + drift_i + sigma_X noise_i), one model period per step.
std::vector<double> exchange_step(const Ensemble& ens, const std::vector<ForceBreakdown>& drift,
                                  const ModelParams& p, const std::vector<double>& noise);

struct StepDiagnostics {
  long t = 0;
  double mean_K = 0.0;
  double mean_abs_X = 0.0;
  double residual_norm = 0.0;
  double relative_residual = 0.0;
  int iterations = 0;
};

struct Trajectory {
  std::vector<Ensemble> snapshots;
  std::uint64_t seed = 0;
  ModelParams params;
  std::vector<StepDiagnostics> diagnostics;  // one entry per step
};

enum class InitMode {
  kConstant,   // K = initial_capital everywhere
  kFieldMean,  // K = <K>_X from the analytic surface
};

struct SimConfig {
  std::size_t n_agents = 100;
  long n_steps = 100;
  std::uint64_t seed = 0;
  long stride = 1;
  std::optional<int> threads;
  InitMode init = InitMode::kConstant;
  double initial_capital = 1.0;
  double initial_log_spread = 0.0;  // K0 multiplied by exp(spread * xi)
  double initial_x_range = 1.0;     // X0 uniform on [-range, range]
  MeanCapitalMode mean_capital = MeanCapitalMode::kAnalytic;
  RhoVariant rho_variant = RhoVariant::kAppendix;
  double price_tol = 1e-10;
  int price_max_iter = 200;
  KernelMode kernel = KernelMode::kAuto;
};

// Initial ensemble of a run (priced at step 0 by the first step).
Ensemble initial_ensemble(const ModelParams& p, const SimConfig& cfg,
                          const FieldSolution* field);

// Standard normals of agent i at step t: first drives capital, second the
// position.
std::vector<NormalPair> step_noise(const RngStreams& rng, std::size_t n, long t, int threads);

struct StepContext {
  const FieldSolution* field = nullptr;
  EmpiricalMeanCapital* empirical = nullptr;
  MeanCapitalMode mean_capital = MeanCapitalMode::kAnalytic;
  double price_tol = 1e-10;
  int price_max_iter = 200;
  KernelMode kernel = KernelMode::kAuto;
  int threads = 1;
};

// One period: solve prices, update capital, then move positions using the
// new capital. Records the clearing prices in ens and advances ens.t.
StepDiagnostics step(Ensemble& ens, const ModelParams& p, const StepContext& ctx,
                     const std::vector<NormalPair>& noise);

using StepObserver = std::function<void(const Ensemble&)>;

// Runs n_steps periods. Snapshots are taken at t % stride == 0 and at the
// final step. The observer, if set, sees the ensemble after every step
// (and the initial one).
Trajectory simulate(const ModelParams& p, const SimConfig& cfg,
                    const StepObserver& observer = {});
Trajectory simulate(const ModelParams& p, std::size_t n_agents, long n_steps,
                    std::uint64_t seed, long stride);

}  // namespace field_econ
