#pragma once

#include <random>

#include "field_econ/core.hpp"

namespace field_econ::testing {

// Uniform draw over the whole validated parameter box.
inline ModelParams random_params(std::mt19937_64& gen) {
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); };
  ModelParams p;
  p.A = u(0.1, 3.0);
  p.A_bar = p.A * u(10.0, 100.0);
  p.alpha = u(0.01, 0.99);
  p.gamma = u(0.01, 0.99);
  p.delta = u(0.01, 0.99);
  p.kappa = u(0.01, 0.99);
  p.d = u(0.05, 2.0);
  p.sigma = u(0.01, 1.0);
  p.sigma_X = u(0.0, 0.5);
  p.vartheta = u(0.1, 10.0);
  p.kappa0 = u(0.0, 1.0);
  p.kappa1 = u(0.0, 2.0);
  p.kappa2 = u(0.0, 1.0);
  p.chi1 = u(0.0, 2.0);
  p.chi2 = u(0.0, 2.0);
  p.alpha_laplace = u(0.0, 1.0);
  p.theta_horizon = u(10.0, 1e4);
  return p;
}

// Non-trivial phase with rho^2 near 1, so that <K>_X stays far above the
// width of the capital Gaussian.
inline ModelParams condensed_params() {
  ModelParams p;
  p.vartheta = 5.0;
  p.kappa1 = 1.0;
  p.kappa2 = 0.8;
  p.chi1 = 0.01;
  p.chi2 = 0.01;
  return p;
}

}  // namespace field_econ::testing
