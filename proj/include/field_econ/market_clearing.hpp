#pragma once

#include <cstddef>
#include <vector>

#include "field_econ/core.hpp"
#include "field_econ/exp_kernel.hpp"

namespace field_econ {

struct PriceVector {
  std::vector<double> prices;
  double residual_norm = 0.0;      // max_i |residual_i| from clearing_residual
  double relative_residual = 0.0;  // residual_norm / max_i P_i^{1+gamma} K_i^alpha
  int iterations = 0;              // Newton iterations over all passes
  std::vector<std::size_t> degenerate;  // zero-capital agents, priced at the cap
};

// exp(-|x_i - x_j| / d); the 1/d prefactor is left to the caller.
double interaction_weight(double x_i, double x_j, double d);

// P_hat_i = (s/d) sum_j P_j exp(-d_ij/d), s = 1 or 1/N. Throws Unpriced if
// some P_j is not a positive finite number.
double price_index(std::size_t i, const Ensemble& ens, const ModelParams& p);
std::vector<double> price_indices(const Ensemble& ens, const ModelParams& p,
                                  KernelMode mode = KernelMode::kAuto);

// residual_i = (k/d^2) sum_{j,k} P_j K_j^a P_k e^{-(d_ij+d_kj)/d} - P_i^{1+g} K_i^a
// with k the effective propensity (kappa, or kappa/N^2 under kMean).
std::vector<double> clearing_residual(const std::vector<double>& prices, const Ensemble& ens,
                                      const ModelParams& p,
                                      KernelMode mode = KernelMode::kAuto);

std::vector<double> residual_with_kernel(const ExpKernel& w, const std::vector<double>& capitals,
                                         const std::vector<double>& prices, const ModelParams& p);

struct PriceSolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  KernelMode mode = KernelMode::kAuto;
  const std::vector<double>* initial = nullptr;  // warm start, optional
};

// Solves the clearing system in log prices with damped Newton steps; the
// linear systems are solved matrix-free by restarted GMRES.
PriceVector solve_prices(const Ensemble& ens, const ModelParams& p, double tol = 1e-10,
                         int max_iter = 200);
PriceVector solve_prices(const Ensemble& ens, const ModelParams& p,
                         const PriceSolveOptions& opts);
PriceVector solve_prices(const ExpKernel& w, const std::vector<double>& capitals,
                         const ModelParams& p, const PriceSolveOptions& opts);

// Y = P A K^alpha.
double income(double K, double P, const ModelParams& p);

// C_i^(j) = (s kappa/d) Y_i P_hat_i / P_j^{1+gamma} exp(-d_ij/d).
double consumption(std::size_t i, std::size_t j, const Ensemble& ens,
                   const std::vector<double>& prices, const ModelParams& p);

// Total spending of every agent, sum_j P_j C_i^(j).
std::vector<double> spending(const ExpKernel& w, const std::vector<double>& capitals,
                             const std::vector<double>& prices, const ModelParams& p);

// kappa scaled by the normalization of both agent sums.
double effective_kappa(const ModelParams& p, std::size_t n);

}  // namespace field_econ
