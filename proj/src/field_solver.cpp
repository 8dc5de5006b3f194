#include "field_econ/field_solver.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace field_econ {

namespace {

struct Exponents {
  double g;      // 1 + gamma (1 - alpha)
  double b;      // (2 - alpha) / g, the "2a" of the identification
  double log_C;  // log of (g / (2 - alpha)) (b^2 - 1)
};

Exponents exponents(const ModelParams& p) {
  Exponents e{};
  e.g = 1.0 + p.gamma * (1.0 - p.alpha);
  e.b = (2.0 - p.alpha) / e.g;
  e.log_C = std::log(e.g / (2.0 - p.alpha)) + std::log(e.b * e.b - 1.0);
  return e;
}

// log(C / (kappa_bar rho^4)), the common factor of D and P.
double log_level(const ModelParams& p, const FieldSolution& f) {
  const double lc = exponents(p).log_C - std::log(f.kappa_bar);
  if (!f.phase.nontrivial()) return lc;
  return lc - 2.0 * std::log(f.rho_sq);
}

}  // namespace

const char* variant_name(RhoVariant v) {
  switch (v) {
    case RhoVariant::kSimple:
      return "simple";
    case RhoVariant::kMainText:
      return "main_text";
    case RhoVariant::kAppendix:
      return "appendix";
  }
  return "?";
}

StructuralConstants structural_constants(const ModelParams& p) {
  const Exponents e = exponents(p);
  const double em1 = std::exp(-1.0 / p.d);
  const double em_half = std::exp(-0.5 / p.d);
  const double r2 = (p.A / p.A_bar) * (p.A / p.A_bar);

  StructuralConstants s;
  // h_bar = g (g / (2 (2-a))) (b^2 - 1) (3/2 - e^{-1/d}/2)
  s.h_bar = e.g * (e.g / (2.0 * (2.0 - p.alpha))) * (e.b * e.b - 1.0) * (1.5 - 0.5 * em1);
  const double denom = 1.0 - r2 * s.h_bar * (1.0 - em1);
  if (!(denom > 0.0)) {
    throw ModelError(ErrorCode::kHBoundViolated,
                     "h denominator 1 - (A/A_bar)^2 h_bar (1 - e^{-1/d}) is not positive");
  }
  s.h = s.h_bar / denom;
  const double bound = std::exp(0.5 / p.d);
  if (!(s.h < bound)) {
    throw ModelError(ErrorCode::kHBoundViolated, "h = " + std::to_string(s.h) +
                                                     " violates h < exp(1/(2d)) = " +
                                                     std::to_string(bound));
  }
  s.kappa_bar = p.kappa * (1.0 - s.h * r2 * (1.0 - em1));
  if (!(s.kappa_bar > 0.0)) {
    throw ModelError(ErrorCode::kHBoundViolated, "kappa_bar is not positive");
  }
  s.u_avg = 1.0 - s.h * em_half * (1.0 - 0.5 * em_half);
  s.u_omega = 1.0 - s.h * (1.0 - em1);
  if (!(s.u_avg > 0.0)) {
    throw ModelError(ErrorCode::kHBoundViolated, "averaged position bracket is not positive");
  }
  return s;
}

namespace {

double omega_from(const ModelParams& p, double u_omega) {
  const double a2 = p.A * p.A;
  const double ab2 = p.A_bar * p.A_bar;
  const double den = a2 * u_omega * u_omega + ab2;
  return p.sigma * std::sqrt(p.delta * p.delta + ab2 * a2 / (den * den));
}

}  // namespace

double discriminant(const ModelParams& p, RhoVariant variant) {
  const double k1sq = p.kappa1 * p.kappa1;
  const double sk0 = std::sqrt(p.kappa0);
  switch (variant) {
    case RhoVariant::kSimple:
      return k1sq - 2.0 * sk0 * p.kappa2;
    case RhoVariant::kMainText:
      return k1sq - 2.0 * p.kappa2 * (2.0 * p.alpha_laplace + sk0 + p.sigma * p.delta);
    case RhoVariant::kAppendix: {
      const double w = omega_from(p, structural_constants(p).u_omega);
      const double inv_v2 = 1.0 / (p.vartheta * p.vartheta);
      return k1sq - 2.0 * p.kappa2 * (2.0 * p.alpha_laplace + 2.0 * inv_v2 + sk0 + w);
    }
  }
  return 0.0;
}

PhaseKind classify_phase(const ModelParams& p, bool refined) {
  PhaseKind k;
  k.discriminant = discriminant(p, refined ? RhoVariant::kAppendix : RhoVariant::kSimple);
  k.tag = k.discriminant > 0.0 ? PhaseTag::kNonTrivial : PhaseTag::kTrivial;
  return k;
}

double rho_squared(const ModelParams& p, RhoVariant variant) {
  if (!(p.kappa2 > 0.0)) {
    throw ModelError(ErrorCode::kDegenerate, "rho^2 needs kappa2 > 0 (division by 2 kappa2)");
  }
  const double disc = discriminant(p, variant);
  if (!(disc > 0.0)) {
    throw ModelError(ErrorCode::kNegativeDiscriminant,
                     std::string("discriminant (") + variant_name(variant) +
                         ") = " + std::to_string(disc) + " is not positive");
  }
  return (p.kappa1 + std::sqrt(disc)) / (2.0 * p.kappa2);
}

FieldSolution make_field(const ModelParams& p, PhaseKind phase, double rho_sq,
                         RhoVariant variant) {
  const StructuralConstants s = structural_constants(p);
  FieldSolution f;
  f.phase = phase;
  f.variant = variant;
  f.rho_sq = phase.nontrivial() ? rho_sq : 0.0;
  f.h_bar = s.h_bar;
  f.h = s.h;
  f.kappa_bar = s.kappa_bar;
  f.u_avg = s.u_avg;
  f.u_omega = s.u_omega;
  f.omega = omega_from(p, s.u_omega);
  f.params = p;
  f.log_D = log_coefficient_D(p, f);
  f.D = std::exp(f.log_D);
  return f;
}

FieldSolution solve_field(const ModelParams& p, RhoVariant variant) {
  PhaseKind phase;
  phase.discriminant = discriminant(p, variant);
  phase.tag = phase.discriminant > 0.0 ? PhaseTag::kNonTrivial : PhaseTag::kTrivial;
  const double r2 = phase.nontrivial() ? rho_squared(p, variant) : 0.0;
  return make_field(p, phase, r2, variant);
}

double log_coefficient_D(const ModelParams& p, const FieldSolution& field) {
  const Exponents e = exponents(p);
  const double e1 = p.alpha / ((1.0 - p.alpha) * (1.0 + p.gamma));
  const double e2 = e.g / ((1.0 - p.gamma * p.gamma) * (1.0 - p.alpha));
  return e1 * (std::log(p.A / p.delta) + std::log(field.u_avg)) + e2 * log_level(p, field);
}

double coefficient_D(const ModelParams& p, const FieldSolution& field) {
  return std::exp(log_coefficient_D(p, field));
}

double f_of_X(double X, const ModelParams& p, const FieldSolution& field) {
  return std::exp(log_coefficient_D(p, field) - std::fabs(X) / (p.d * (1.0 + p.gamma)));
}

double position_bracket(double X, const ModelParams& p, const FieldSolution& field) {
  return 1.0 - field.h * std::exp(-std::fabs(X) / p.d) *
                   (1.0 - std::cosh(X / p.d) * std::exp(-1.0 / p.d));
}

double log_mean_capital(double X, const ModelParams& p, const FieldSolution& field) {
  const Exponents e = exponents(p);
  const double log_f = log_coefficient_D(p, field) - std::fabs(X) / (p.d * (1.0 + p.gamma));
  return ((1.0 + p.gamma) / e.g) *
         (std::log(p.A / p.delta) + log_f + std::log(position_bracket(X, p, field)));
}

double mean_capital(double X, const ModelParams& p, const FieldSolution& field) {
  return std::exp(log_mean_capital(X, p, field));
}

double log_price_surface(double K, double X, const ModelParams& p, const FieldSolution& field) {
  const Exponents e = exponents(p);
  const double level = log_level(p, field) / (1.0 - p.gamma);
  const double decay = (1.0 - p.alpha) * std::fabs(X) / (p.d * e.g);
  const double ratio = (p.alpha / (1.0 + p.gamma)) * (std::log(K) - log_mean_capital(X, p, field));
  const double bracket =
      (p.alpha / e.g) * (std::log(position_bracket(X, p, field)) - std::log(field.u_avg));
  return level - decay - ratio - bracket;
}

double price_surface(double K, double X, const ModelParams& p, const FieldSolution& field) {
  return std::exp(log_price_surface(K, X, p, field));
}

double omega(const ModelParams& p, const FieldSolution& field) {
  return omega_from(p, field.u_omega);
}

OmegaAlpha omega_alpha_X(double K, double K_prime, double X, double X_prime,
                         const ModelParams& p, const FieldSolution& field) {
  const double ratio = K / mean_capital(X, p, field) + K_prime / mean_capital(X_prime, p, field);
  // (1 - e^{-chi}) / chi with its limit 1 at chi = 0
  auto g = [](double chi) { return chi > 0.0 ? -std::expm1(-chi) / chi : 1.0; };
  OmegaAlpha r{};
  r.omega_bar = p.kappa0 + 0.5 * p.kappa1 * ratio * std::exp(-p.chi1) * p.chi1 -
                p.kappa2 * std::exp(-p.chi2) * p.chi2;
  r.alpha_bar = p.alpha_laplace - 0.5 * p.kappa1 * ratio * 2.0 * g(p.chi1) +
                p.kappa2 * 2.0 * g(p.chi2);
  if (!(r.omega_bar > 0.0)) {
    throw ModelError(ErrorCode::kNonpositiveFrequency,
                     "omega_bar_X = " + std::to_string(r.omega_bar) + " is not positive");
  }
  return r;
}

double delta_X(double K, double mean_K, const ModelParams& p, const FieldSolution& field,
               DeltaXVariant variant) {
  if (!field.phase.nontrivial()) {
    throw ModelError(ErrorCode::kWrongPhase, "delta_X is defined in the non-trivial phase only");
  }
  const double r2 = field.rho_sq;
  const double dx =
      p.chi1 * p.kappa1 * (K / (2.0 * mean_K)) * r2 - p.chi2 * p.kappa2 * r2 * r2;
  if (variant == DeltaXVariant::kOverKappa0) {
    if (!(p.kappa0 > 0.0)) {
      throw ModelError(ErrorCode::kInvalidArgument, "delta_X / kappa0 needs kappa0 > 0");
    }
    return dx / p.kappa0;
  }
  return dx;
}

double heaviside(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return 0.0;
  return 0.5;
}

double ground_state_norm(const ModelParams& p, const FieldSolution& field,
                         GroundNormalization norm) {
  const double w = field.omega / p.sigma;  // sqrt(delta^2 + A_bar^2 A^2 / (...)^2)
  const double sk0 = std::sqrt(p.kappa0);
  switch (norm) {
    case GroundNormalization::kUnitMass:
      // int exp(-y^2/sqrt(k0)) dy = sqrt(pi sqrt(k0)), int exp(-w u^2/sigma) du = sqrt(pi sigma/w)
      return 1.0 / std::sqrt(std::numbers::pi * std::sqrt(sk0 * p.sigma / w));
    case GroundNormalization::kPrinted:
      return 1.0 / (2.0 * std::numbers::pi * std::sqrt(p.sigma * w / sk0));
    case GroundNormalization::kPrintedTheta:
      return 1.0 / (2.0 * std::numbers::pi * std::sqrt(p.sigma * w / sk0)) /
             std::sqrt(p.theta_horizon);
  }
  return 0.0;
}

double ground_state(double K, double X, const ModelParams& p, const FieldSolution& field,
                    GroundNormalization norm, DeltaXVariant variant) {
  if (!field.phase.nontrivial()) {
    throw ModelError(ErrorCode::kWrongPhase, "ground state is zero in the trivial phase");
  }
  if (!(p.kappa0 > 0.0)) {
    throw ModelError(ErrorCode::kInvalidArgument, "ground state needs kappa0 > 0");
  }
  const double mk = mean_capital(X, p, field);
  const double dx = delta_X(K, mk, p, field, variant);
  const double c = 1.0 / std::sqrt(p.kappa0);
  const double plus = X + dx;
  const double minus = X - dx;
  const double psi_x = std::exp(-0.5 * c * plus * plus) * heaviside(X) +
                       std::exp(-0.5 * c * minus * minus) * heaviside(-X);
  const double w = field.omega / p.sigma;
  const double u = K - mk;
  const double psi_k = std::exp(-w * u * u / (2.0 * p.sigma));
  return std::sqrt(field.rho_sq) * ground_state_norm(p, field, norm) * psi_x * psi_k;
}

// The identification for f(X) = D exp(-c|X|/d):
//   1. The clearing condition averaged over positions gives
//        f(X)^{1+g} ~ (k/(2d)) int <K>_{X2}^{a(g-1)/(1+g)} f(X2)^2 e^{-|X-X2|/d} dX2
//      (g = gamma, a = alpha here).
//   2. <K>_{X2} is replaced by its leading form (A/delta f u)^{(1+g)/G} with the
//      position bracket replaced by its average u_avg, G = 1 + g(1-a).
//   3. With c = 1/(1+g), the integrand decays as e^{-2a' |X2|/d},
//      2a' = (2-a)/G = b, and the integral is approximated by
//        d (4a' e^{-X/d} - 2 e^{-2a'X/d}) / (4a'^2 - 1);
//      only the leading e^{-X/d} term is kept.
//   4. Both sides then scale as e^{-|X|/d} and the condition on D is
//        (k/2) (A/delta)^p D^q u_avg^p (2b / (b^2 - 1)) = 1,
//      p = a(g-1)/G, q = (1-g^2)(1-a)/G, with k -> kappa_bar rho^4.
// The residual below is LHS - RHS of step 4 times e^{-|X|/d}.
double identification_residual(double X, const ModelParams& p, const FieldSolution& field) {
  const Exponents e = exponents(p);
  const double pe = p.alpha * (p.gamma - 1.0) / e.g;
  const double qe = (1.0 - p.gamma * p.gamma) * (1.0 - p.alpha) / e.g;
  const double k_eff = field.kappa_bar * field.rho4();
  const double log_rhs = std::log(0.5 * k_eff) + pe * std::log(p.A / p.delta) +
                         qe * field.log_D + pe * std::log(field.u_avg) +
                         std::log(2.0 * e.b / (e.b * e.b - 1.0));
  const double decay = std::exp(-std::fabs(X) / p.d);
  return decay - std::exp(log_rhs) * decay;
}

}  // namespace field_econ
