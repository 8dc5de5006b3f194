#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "field_econ/core.hpp"
#include "field_econ/dynamics.hpp"
#include "field_econ/field_solver.hpp"

namespace field_econ {

struct CheckRecord {
  std::string name;
  std::string anchor;  // model claim the check tests
  double predicted = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool reported_only = false;  // informational, never fails the report
  nlohmann::json stats = nlohmann::json::object();
};

struct ValidationReport {
  std::vector<CheckRecord> checks;
  nlohmann::json metadata = nlohmann::json::object();

  bool all_passed() const;
  const CheckRecord* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct McConfig {
  SimConfig sim;                 // n_agents, n_steps, init, solver settings
  int n_seeds = 20;
  std::uint64_t base_seed = 1;   // replica r uses base_seed + r
  double pass_fraction = 0.95;   // share of seeds an ordering check must hold in
  // phase 1
  double spearman_threshold = -0.8;
  double slope_tolerance = 0.2;  // relative
  bool check_d_ordering = true;
  double d_alt = 2.0;            // larger range for the ordering rerun
  // phase 2
  double cohort_high = 1.5;
  double cohort_low = 0.5;
  double gap_threshold = 0.15;
  double matched_kappa1 = 0.0;   // (k1, k2) of the matched phase-1 run
  double matched_kappa2 = -1.0;  // < 0 keeps k2
  int threads_outer = 1;         // seed replicas run in parallel
};

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Mean capital per |X| bin (n_bins uniform on [0, 1]); returns (centre, mean)
// of the non-empty bins.
std::pair<std::vector<double>, std::vector<double>> binned_mean_by_abs_x(const Ensemble& ens,
                                                                         int n_bins);

// Slope of log P on log K after removing per-bin means over n_bins uniform
// X bins (the bin effects absorb <K>_X and the position terms).
double within_bin_price_slope(const Ensemble& ens, int n_bins);

ValidationReport validate_phase1(const ModelParams& p, const McConfig& mc);
ValidationReport validate_phase2(const ModelParams& p, const McConfig& mc);

struct BarrierStats {
  std::vector<long> crossings;     // per agent
  std::vector<int> initial_side;   // +1 above the surface, -1 below (0 on it)
  long n_observations = 0;         // snapshots seen
  double rate = 0.0;               // crossings per agent per step
  double rate_initially_above = 0.0;
  double rate_initially_below = 0.0;
};

// Counts sign changes of K - <K>_X per agent between consecutive observed
// states. A state exactly on the surface keeps the previous sign.
class BarrierCounter {
 public:
  BarrierCounter(const ModelParams& p, const FieldSolution& field) : p_(p), field_(field) {}
  void observe(const Ensemble& ens);
  BarrierStats result() const;

 private:
  ModelParams p_;
  FieldSolution field_;
  std::vector<long> crossings_;
  std::vector<int> initial_;
  std::vector<int> last_;
  long n_obs_ = 0;
};

BarrierStats barrier_stats(const Trajectory& traj, const FieldSolution& field);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepCell {
  std::vector<double> coords;  // one value per axis
  PhaseKind phase;             // discriminant of the configured test
  double rho_sq = 0.0;         // 0 in the trivial phase
  double h = 0.0;
  double D = 0.0;
  bool boundary = false;       // discriminant sign differs from a neighbour
  std::string error;           // set when a constant could not be evaluated
};

struct SweepGrid {
  std::vector<SweepAxis> axes;
  std::vector<SweepCell> cells;  // row-major, last axis fastest
  bool refined = false;
};

// Linearly spaced values, both ends included.
std::vector<double> linspace(double start, double stop, int num);

// refined = false tests the simple discriminant, true the full one; rho^2
// uses the matching variant.
SweepGrid phase_diagram(const std::vector<SweepAxis>& axes, const ModelParams& base,
                        bool refined = false);

}  // namespace field_econ
