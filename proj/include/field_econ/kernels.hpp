#pragma once

#include <vector>

#include "field_econ/core.hpp"
#include "field_econ/field_solver.hpp"

namespace field_econ {

struct KernelQuery {
  double K = 1.0;
  double K_prime = 1.0;
  double X = 0.0;
  double X_prime = 0.0;
  double theta = 1.0;
  double theta_prime = 0.0;
};

// Harmonic-oscillator propagator
//   sqrt(w / (2 pi s2 sinh(w t))) exp(-w ((x^2 + x'^2) cosh(w t) - 2 x x') / (2 s2 sinh(w t)))
// evaluated in log space. Throws NonpositiveTime for t <= 0 and
// InvalidArgument for w <= 0 or s2 <= 0.
double log_mehler(double x, double x_prime, double t, double freq, double s2);
double mehler(double x, double x_prime, double t, double freq, double s2);

// (<K>_X + <K>_X') / 2
double path_mean_capital(double X, double X_prime, const ModelParams& p,
                         const FieldSolution& field);

struct TransitionValue {
  double density = 0.0;
  double log_density = 0.0;  // -inf when density is 0
  double log_boundary = 0.0;
  double log_x_factor = 0.0;
  double log_k_factor = 0.0;
  double P = 0.0;        // price attached to (K, X)
  double P_prime = 0.0;  // price attached to (K', X')
};

// Phase-2 position factor G_K(X, X') built from four gated, shifted
// propagators with frequency k0 and diffusion sigma_X^2.
double phase2_x_factor(double X, double X_prime, double t, double dX, const ModelParams& p);

// Transition density of one agent. t = theta - theta'; the density is 0 for
// t <= 0. The price deltas are returned as the attached deterministic prices.
TransitionValue transition_phase1(const KernelQuery& q, const ModelParams& p,
                                  const FieldSolution& field);
TransitionValue transition_phase2(const KernelQuery& q, const ModelParams& p,
                                  const FieldSolution& field,
                                  DeltaXVariant variant = DeltaXVariant::kMainText);

// Dispatches on the phase of the field.
TransitionValue transition(const KernelQuery& q, const ModelParams& p,
                           const FieldSolution& field);

// Product of the single-agent densities (sum of the logs).
double log_multi_agent_density(const std::vector<KernelQuery>& queries, const ModelParams& p,
                               const FieldSolution& field);
double multi_agent_density(const std::vector<KernelQuery>& queries, const ModelParams& p,
                           const FieldSolution& field);

}  // namespace field_econ
