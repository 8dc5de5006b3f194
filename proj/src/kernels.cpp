#include "field_econ/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace field_econ {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sinh z) for z > 0 without overflow.
double log_sinh(double z) {
  if (z > 20.0) return z - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * z));
  return std::log(std::sinh(z));
}

double boundary_term(double K, double X, const ModelParams& p, const FieldSolution& field) {
  const double u = K - mean_capital(X, p, field);
  return u * u / (2.0 * p.sigma * p.sigma);
}

TransitionValue zero_density() {
  TransitionValue v;
  v.density = 0.0;
  v.log_density = kNegInf;
  return v;
}

}  // namespace

double log_mehler(double x, double x_prime, double t, double freq, double s2) {
  if (!(t > 0.0)) throw ModelError(ErrorCode::kNonpositiveTime, "kernel time must be > 0");
  if (!(freq > 0.0) || !(s2 > 0.0)) {
    throw ModelError(ErrorCode::kInvalidArgument, "kernel frequency and diffusion must be > 0");
  }
  const double z = freq * t;
  const double ls = log_sinh(z);
  // (x^2 + x'^2) coth z - 2 x x' csch z rewritten without cancellation as
  // (x - x')^2 csch z + (x^2 + x'^2) tanh(z/2).
  const double csch = std::exp(-ls);
  const double dx = x - x_prime;
  const double quad = dx * dx * csch + (x * x + x_prime * x_prime) * std::tanh(0.5 * z);
  return 0.5 * (std::log(freq) - std::log(2.0 * std::numbers::pi * s2) - ls) -
         freq / (2.0 * s2) * quad;
}

double mehler(double x, double x_prime, double t, double freq, double s2) {
  return std::exp(log_mehler(x, x_prime, t, freq, s2));
}

double path_mean_capital(double X, double X_prime, const ModelParams& p,
                         const FieldSolution& field) {
  return 0.5 * (mean_capital(X, p, field) + mean_capital(X_prime, p, field));
}

double phase2_x_factor(double X, double X_prime, double t, double dX, const ModelParams& p) {
  const double s2 = p.sigma_X * p.sigma_X;
  const double k0 = p.kappa0;
  const double hp = heaviside(X), hm = heaviside(-X);
  const double hpp = heaviside(X_prime), hmp = heaviside(-X_prime);
  double g = 0.0;
  if (hp * hpp > 0.0) g += hp * hpp * mehler(X + dX, X_prime + dX, t, k0, s2);
  if (hm * hmp > 0.0) g += hm * hmp * mehler(X - dX, X_prime - dX, t, k0, s2);
  if (hp * hmp > 0.0) g += hp * hmp * mehler(X + dX, X_prime - dX, t, k0, s2);
  if (hm * hpp > 0.0) g += hm * hpp * mehler(X - dX, X_prime + dX, t, k0, s2);
  return g;
}

TransitionValue transition_phase1(const KernelQuery& q, const ModelParams& p,
                                  const FieldSolution& field) {
  if (field.phase.nontrivial()) {
    throw ModelError(ErrorCode::kWrongPhase, "phase-1 transition needs the trivial phase");
  }
  const double t = q.theta - q.theta_prime;
  if (!(t > 0.0)) return zero_density();

  TransitionValue v;
  v.P = price_surface(q.K, q.X, p, field);
  v.P_prime = price_surface(q.K_prime, q.X_prime, p, field);
  v.log_boundary = -(boundary_term(q.K_prime, q.X_prime, p, field) -
                     boundary_term(q.K, q.X, p, field));
  const OmegaAlpha wa = omega_alpha_X(q.K, q.K_prime, q.X, q.X_prime, p, field);
  v.log_x_factor = log_mehler(q.X, q.X_prime, t, wa.omega_bar, p.sigma_X * p.sigma_X);
  const double mk = path_mean_capital(q.X, q.X_prime, p, field);
  v.log_k_factor = log_mehler(q.K - mk, q.K_prime - mk, t, field.omega, p.sigma * p.sigma);
  v.log_density = v.log_boundary + v.log_x_factor + v.log_k_factor;
  v.density = std::exp(v.log_density);
  return v;
}

TransitionValue transition_phase2(const KernelQuery& q, const ModelParams& p,
                                  const FieldSolution& field, DeltaXVariant variant) {
  if (!field.phase.nontrivial()) {
    throw ModelError(ErrorCode::kWrongPhase, "phase-2 transition needs the non-trivial phase");
  }
  const double t = q.theta - q.theta_prime;
  if (!(t > 0.0)) return zero_density();

  TransitionValue v;
  v.P = price_surface(q.K, q.X, p, field);
  v.P_prime = price_surface(q.K_prime, q.X_prime, p, field);
  v.log_boundary = -(boundary_term(q.K_prime, q.X_prime, p, field) -
                     boundary_term(q.K, q.X, p, field));
  const double mk = path_mean_capital(q.X, q.X_prime, p, field);
  const double dX = delta_X(0.5 * (q.K + q.K_prime), mk, p, field, variant);
  v.log_x_factor = std::log(phase2_x_factor(q.X, q.X_prime, t, dX, p));
  v.log_k_factor = log_mehler(q.K - mk, q.K_prime - mk, t, field.omega, p.sigma * p.sigma);
  v.log_density = v.log_boundary + v.log_x_factor + v.log_k_factor;
  v.density = std::exp(v.log_density);
  return v;
}

TransitionValue transition(const KernelQuery& q, const ModelParams& p,
                           const FieldSolution& field) {
  return field.phase.nontrivial() ? transition_phase2(q, p, field)
                                  : transition_phase1(q, p, field);
}

double log_multi_agent_density(const std::vector<KernelQuery>& queries, const ModelParams& p,
                               const FieldSolution& field) {
  double acc = 0.0;
  for (const KernelQuery& q : queries) {
    const TransitionValue v = transition(q, p, field);
    if (v.density == 0.0 && v.log_density == kNegInf) return kNegInf;
    acc += v.log_density;
  }
  return acc;
}

double multi_agent_density(const std::vector<KernelQuery>& queries, const ModelParams& p,
                           const FieldSolution& field) {
  return std::exp(log_multi_agent_density(queries, p, field));
}

}  // namespace field_econ
