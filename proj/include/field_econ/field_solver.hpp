#pragma once

#include "field_econ/core.hpp"

namespace field_econ {

enum class PhaseTag { kTrivial, kNonTrivial };

struct PhaseKind {
  PhaseTag tag = PhaseTag::kTrivial;
  double discriminant = 0.0;
  bool nontrivial() const { return tag == PhaseTag::kNonTrivial; }
};

// Which closed form for rho^2 (and which discriminant) to use.
//   kSimple:   k1^2 - 2 sqrt(k0) k2
//   kMainText: k1^2 - 2 k2 (2 a + sqrt(k0) + sigma delta)
//   kAppendix: k1^2 - 2 k2 (2 a + 2/vartheta^2 + sqrt(k0) + omega)
// with a the Laplace parameter and omega the capital-oscillator frequency.
enum class RhoVariant { kSimple, kMainText, kAppendix };

const char* variant_name(RhoVariant v);

double discriminant(const ModelParams& p, RhoVariant variant);

// refined = false uses kSimple, refined = true uses kAppendix.
PhaseKind classify_phase(const ModelParams& p, bool refined);

// rho^2 = (k1 + sqrt(disc)) / (2 k2). Throws Degenerate for k2 <= 0 and
// NegativeDiscriminant when disc <= 0.
double rho_squared(const ModelParams& p, RhoVariant variant = RhoVariant::kAppendix);

struct StructuralConstants {
  double h_bar = 0.0;
  double h = 0.0;
  double kappa_bar = 0.0;
  double u_avg = 0.0;    // 1 - h e^{-1/(2d)} (1 - e^{-1/(2d)}/2), used in D and P
  double u_omega = 0.0;  // 1 - h (1 - e^{-1/d}), used in omega
};

// Throws HBoundViolated when h >= e^{1/(2d)} or a derived factor that must be
// positive is not.
StructuralConstants structural_constants(const ModelParams& p);

struct FieldSolution {
  PhaseKind phase;
  RhoVariant variant = RhoVariant::kAppendix;
  double rho_sq = 0.0;
  double h_bar = 0.0;
  double h = 0.0;
  double kappa_bar = 0.0;
  double D = 0.0;
  double log_D = 0.0;
  double u_avg = 0.0;
  double u_omega = 0.0;
  double omega = 0.0;
  ModelParams params;

  // rho^4 in the phase-2 factors; exactly 1 in the trivial phase.
  double rho4() const { return phase.nontrivial() ? rho_sq * rho_sq : 1.0; }
};

FieldSolution solve_field(const ModelParams& p, RhoVariant variant = RhoVariant::kAppendix);

// Builds a solution with a prescribed phase and rho^2 (rho_sq is ignored in
// the trivial phase).
FieldSolution make_field(const ModelParams& p, PhaseKind phase, double rho_sq,
                         RhoVariant variant = RhoVariant::kAppendix);

double coefficient_D(const ModelParams& p, const FieldSolution& field);
double log_coefficient_D(const ModelParams& p, const FieldSolution& field);

// f(X) = D exp(-|X| / (d (1+gamma))).
double f_of_X(double X, const ModelParams& p, const FieldSolution& field);

// 1 - h e^{-|X|/d} (1 - cosh(X/d) e^{-1/d}).
double position_bracket(double X, const ModelParams& p, const FieldSolution& field);

double mean_capital(double X, const ModelParams& p, const FieldSolution& field);
double log_mean_capital(double X, const ModelParams& p, const FieldSolution& field);

double price_surface(double K, double X, const ModelParams& p, const FieldSolution& field);
double log_price_surface(double K, double X, const ModelParams& p, const FieldSolution& field);

double omega(const ModelParams& p, const FieldSolution& field);

struct OmegaAlpha {
  double omega_bar;
  double alpha_bar;
};

// Path-averaged frequency and Laplace shift. Throws NonpositiveFrequency when
// omega_bar <= 0.
OmegaAlpha omega_alpha_X(double K, double K_prime, double X, double X_prime,
                         const ModelParams& p, const FieldSolution& field);

enum class DeltaXVariant { kMainText, kOverKappa0 };

// dX = chi1 k1 (K / (2 <K>)) rho^2 - chi2 k2 rho^4, optionally divided by k0.
// Throws WrongPhase in the trivial phase.
double delta_X(double K, double mean_K, const ModelParams& p, const FieldSolution& field,
               DeltaXVariant variant = DeltaXVariant::kMainText);

enum class GroundNormalization {
  kUnitMass,      // N chosen so that the unshifted state carries mass rho^2 on R^2
  kPrinted,       // N = 1 / (2 pi sqrt(k0^{-1/2} sigma w)), w = omega / sigma
  kPrintedTheta,  // the printed N divided by sqrt(theta_horizon)
};

double ground_state_norm(const ModelParams& p, const FieldSolution& field,
                         GroundNormalization norm);

// Heaviside step with H(0) = 1/2, so that H(x) + H(-x) = 1 everywhere.
double heaviside(double x);

// Psi0(K, X) of the non-trivial phase. Throws WrongPhase in the trivial phase.
double ground_state(double K, double X, const ModelParams& p, const FieldSolution& field,
                    GroundNormalization norm = GroundNormalization::kUnitMass,
                    DeltaXVariant variant = DeltaXVariant::kMainText);

// Residual of the leading-order identification equation for f(X), see the
// derivation in field_solver.cpp.
double identification_residual(double X, const ModelParams& p, const FieldSolution& field);

}  // namespace field_econ
