#include "field_econ/market_clearing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/IterativeSolvers>

namespace field_econ {
namespace detail {

// Clearing system in log prices u = log P over the agents with K > 0:
//   F_i(u) = log Q_i(u) - (1+gamma) u_i - alpha log K_i,
//   Q_i = c sum_j W_ij y_j S_j,  y_j = P_j K_j^alpha,  S_j = sum_k W_jk P_k.
// Zero-capital agents carry the largest active price and have no equation.
class ClearingSystem {
 public:
  ClearingSystem(const ExpKernel& w, const std::vector<double>& capitals, const ModelParams& p)
      : w_(w), n_(capitals.size()), gamma_(p.gamma) {
    c_ = effective_kappa(p, n_) / (p.d * p.d);
    ka_.resize(n_);
    log_term_.resize(n_);
    active_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      active_[i] = capitals[i] > 0.0;
      ka_[i] = active_[i] ? std::pow(capitals[i], p.alpha) : 0.0;
      log_term_[i] = active_[i] ? p.alpha * std::log(capitals[i]) : 0.0;
      if (active_[i]) ++n_active_;
    }
    P_.resize(n_);
    S_.resize(n_);
    y_.resize(n_);
    Q_.resize(n_);
    tmp_.resize(n_);
  }

  std::size_t size() const { return n_; }
  std::size_t active_count() const { return n_active_; }
  bool active(std::size_t i) const { return active_[i]; }

  // Copies the largest active log price onto the inactive agents.
  void expand(std::vector<double>& u) {
    if (n_active_ == n_) return;
    double best = -std::numeric_limits<double>::infinity();
    argmax_ = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (active_[i] && u[i] > best) {
        best = u[i];
        argmax_ = i;
      }
    }
    for (std::size_t i = 0; i < n_; ++i) {
      if (!active_[i]) u[i] = best;
    }
  }

  void eval(std::vector<double>& u, std::vector<double>& F) {
    expand(u);
    for (std::size_t i = 0; i < n_; ++i) P_[i] = std::exp(u[i]);
    w_.apply(P_.data(), S_.data());
    for (std::size_t i = 0; i < n_; ++i) {
      y_[i] = P_[i] * ka_[i];
      tmp_[i] = y_[i] * S_[i];
    }
    w_.apply(tmp_.data(), Q_.data());
    F.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      Q_[i] *= c_;
      F[i] = active_[i] ? std::log(Q_[i]) - (1.0 + gamma_) * u[i] - log_term_[i] : 0.0;
    }
  }

  // Jacobian-vector product at the last evaluated point.
  void jacobian_apply(const double* v, double* out) const {
    std::vector<double> vm(n_), a(n_), b(n_), t(n_);
    for (std::size_t i = 0; i < n_; ++i) vm[i] = active_[i] ? v[i] : v[argmax_];
    for (std::size_t i = 0; i < n_; ++i) t[i] = y_[i] * S_[i] * vm[i];
    w_.apply(t.data(), a.data());
    for (std::size_t i = 0; i < n_; ++i) t[i] = P_[i] * vm[i];
    w_.apply(t.data(), b.data());
    for (std::size_t i = 0; i < n_; ++i) t[i] = y_[i] * b[i];
    w_.apply(t.data(), b.data());
    for (std::size_t i = 0; i < n_; ++i) {
      out[i] = active_[i] ? c_ * (a[i] + b[i]) / Q_[i] - (1.0 + gamma_) * v[i] : v[i];
    }
  }

 private:
  const ExpKernel& w_;
  std::size_t n_;
  std::size_t n_active_ = 0;
  std::size_t argmax_ = 0;
  double gamma_;
  double c_;
  std::vector<double> ka_, log_term_;
  std::vector<char> active_;
  std::vector<double> P_, S_, y_, Q_, tmp_;
};

class JacobianOperator;

}  // namespace detail
}  // namespace field_econ

namespace Eigen::internal {
template <>
struct traits<field_econ::detail::JacobianOperator>
    : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace field_econ::detail {

class JacobianOperator : public Eigen::EigenBase<JacobianOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum {
    ColsAtCompileTime = Eigen::Dynamic,
    MaxColsAtCompileTime = Eigen::Dynamic,
    IsRowMajor = false
  };

  explicit JacobianOperator(const ClearingSystem* sys) : sys_(sys) {}

  Eigen::Index rows() const { return static_cast<Eigen::Index>(sys_->size()); }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(sys_->size()); }

  template <typename Rhs>
  Eigen::Product<JacobianOperator, Rhs, Eigen::AliasFreeProduct> operator*(
      const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<JacobianOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  void apply(const double* v, double* out) const { sys_->jacobian_apply(v, out); }

 private:
  const ClearingSystem* sys_;
};

}  // namespace field_econ::detail

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<field_econ::detail::JacobianOperator, Rhs, SparseShape, DenseShape,
                            GemvProduct>
    : generic_product_impl_base<
          field_econ::detail::JacobianOperator, Rhs,
          generic_product_impl<field_econ::detail::JacobianOperator, Rhs>> {
  using Scalar = typename Product<field_econ::detail::JacobianOperator, Rhs>::Scalar;

  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const field_econ::detail::JacobianOperator& lhs,
                            const Rhs& rhs, const Scalar& alpha) {
    Eigen::VectorXd x = rhs;
    Eigen::VectorXd y(x.size());
    lhs.apply(x.data(), y.data());
    dst.noalias() += alpha * y;
  }
};
}  // namespace Eigen::internal

namespace field_econ {

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_priced(const std::vector<double>& prices) {
  for (std::size_t j = 0; j < prices.size(); ++j) {
    if (!(prices[j] > 0.0) || !std::isfinite(prices[j])) {
      std::ostringstream os;
      os << "agent " << j << " has no valid price (" << prices[j] << ")";
      throw ModelError(ErrorCode::kUnpriced, os.str());
    }
  }
}

}  // namespace

double effective_kappa(const ModelParams& p, std::size_t n) {
  const double s = p.sum_scale(n);
  return p.kappa * s * s;
}

double interaction_weight(double x_i, double x_j, double d) {
  return std::exp(-std::fabs(x_i - x_j) / d);
}

double price_index(std::size_t i, const Ensemble& ens, const ModelParams& p) {
  const std::vector<double> prices = ens.prices();
  check_priced(prices);
  double acc = 0.0;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    acc += prices[j] * interaction_weight(ens.agents[i].X, ens.agents[j].X, p.d);
  }
  return p.sum_scale(ens.size()) * acc / p.d;
}

std::vector<double> price_indices(const Ensemble& ens, const ModelParams& p, KernelMode mode) {
  const std::vector<double> prices = ens.prices();
  check_priced(prices);
  const ExpKernel w(ens.positions(), 1.0 / p.d, mode);
  std::vector<double> out = w.apply(prices);
  const double scale = p.sum_scale(ens.size()) / p.d;
  for (double& v : out) v *= scale;
  return out;
}

std::vector<double> residual_with_kernel(const ExpKernel& w, const std::vector<double>& capitals,
                                         const std::vector<double>& prices, const ModelParams& p) {
  const std::size_t n = capitals.size();
  std::vector<double> ka(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    ka[i] = capitals[i] > 0.0 ? std::pow(capitals[i], p.alpha) : 0.0;
  }
  // The k-sum is the unnormalized price index S_j = sum_k W_jk P_k.
  const std::vector<double> S = w.apply(prices);
  for (std::size_t j = 0; j < n; ++j) z[j] = prices[j] * ka[j] * S[j];
  std::vector<double> demand = w.apply(z);
  const double c = effective_kappa(p, n) / (p.d * p.d);
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) {
    res[i] = c * demand[i] - std::pow(prices[i], 1.0 + p.gamma) * ka[i];
  }
  return res;
}

std::vector<double> clearing_residual(const std::vector<double>& prices, const Ensemble& ens,
                                      const ModelParams& p, KernelMode mode) {
  const ExpKernel w(ens.positions(), 1.0 / p.d, mode);
  return residual_with_kernel(w, ens.capitals(), prices, p);
}

PriceVector solve_prices(const Ensemble& ens, const ModelParams& p, double tol, int max_iter) {
  PriceSolveOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return solve_prices(ens, p, opts);
}

PriceVector solve_prices(const Ensemble& ens, const ModelParams& p,
                         const PriceSolveOptions& opts) {
  const ExpKernel w(ens.positions(), 1.0 / p.d, opts.mode);
  return solve_prices(w, ens.capitals(), p, opts);
}

PriceVector solve_prices(const ExpKernel& w, const std::vector<double>& capitals,
                         const ModelParams& p, const PriceSolveOptions& opts) {
  const std::size_t n = capitals.size();
  if (n == 0) throw ModelError(ErrorCode::kInvalidArgument, "empty ensemble");
  if (!(p.gamma < 1.0)) throw ModelError(ErrorCode::kInvalidArgument, "gamma must be < 1");

  PriceVector out;
  detail::ClearingSystem sys(w, capitals, p);
  for (std::size_t i = 0; i < n; ++i) {
    if (!sys.active(i)) out.degenerate.push_back(i);
  }
  if (sys.active_count() == 0) {
    // Nothing is produced: every equation is 0 = 0.
    out.prices.assign(n, 1.0);
    return out;
  }

  std::vector<double> u(n, 0.0), F, u_try, F_try;
  if (opts.initial && opts.initial->size() == n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (*opts.initial)[i];
      u[i] = (v > 0.0 && std::isfinite(v)) ? std::log(v) : 0.0;
    }
  }
  // Pin the overall scale first: a common shift s moves every F_i by
  // (1-gamma) s because demand is degree 2 and supply degree 1+gamma.
  sys.eval(u, F);
  double mean_f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sys.active(i)) mean_f += F[i];
  }
  mean_f /= static_cast<double>(sys.active_count());
  for (std::size_t i = 0; i < n; ++i) u[i] -= mean_f / (1.0 - p.gamma);
  sys.eval(u, F);

  detail::JacobianOperator op(&sys);
  Eigen::GMRES<detail::JacobianOperator, Eigen::IdentityPreconditioner> gmres;
  gmres.set_restart(40);
  gmres.setMaxIterations(400);

  int it = 0;
  double fnorm = norm2(F);
  while (max_abs(F) > opts.tol) {
    if (it >= opts.max_iter) {
      std::ostringstream os;
      os << "price solve stopped after " << it << " iterations, max log residual "
         << max_abs(F);
      throw ModelError(ErrorCode::kNoConvergence, os.str());
    }
    ++it;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) rhs[static_cast<Eigen::Index>(i)] = -F[i];
    gmres.setTolerance(std::clamp(fnorm, 1e-14, 1e-2));
    gmres.compute(op);
    const Eigen::VectorXd du = gmres.solve(rhs);

    double lambda = 1.0;
    bool accepted = false;
    while (lambda > 1e-10) {
      u_try = u;
      for (std::size_t i = 0; i < n; ++i) u_try[i] += lambda * du[static_cast<Eigen::Index>(i)];
      sys.eval(u_try, F_try);
      const double trial = norm2(F_try);
      if (std::isfinite(trial) && trial <= (1.0 - 1e-4 * lambda) * fnorm) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      sys.eval(u, F);
      std::ostringstream os;
      os << "line search stalled at iteration " << it << ", max log residual " << max_abs(F);
      throw ModelError(ErrorCode::kNoConvergence, os.str());
    }
    u.swap(u_try);
    F.swap(F_try);
    fnorm = norm2(F);
  }

  sys.expand(u);
  out.prices.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.prices[i] = std::exp(u[i]);
  out.iterations = it;

  const std::vector<double> res = residual_with_kernel(w, capitals, out.prices, p);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!sys.active(i)) continue;
    out.residual_norm = std::max(out.residual_norm, std::fabs(res[i]));
    scale = std::max(scale, std::pow(out.prices[i], 1.0 + p.gamma) * std::pow(capitals[i], p.alpha));
  }
  out.relative_residual = scale > 0.0 ? out.residual_norm / scale : 0.0;
  return out;
}

double income(double K, double P, const ModelParams& p) {
  return K > 0.0 ? P * p.A * std::pow(K, p.alpha) : 0.0;
}

double consumption(std::size_t i, std::size_t j, const Ensemble& ens,
                   const std::vector<double>& prices, const ModelParams& p) {
  check_priced(prices);
  double acc = 0.0;
  for (std::size_t k = 0; k < ens.size(); ++k) {
    acc += prices[k] * interaction_weight(ens.agents[i].X, ens.agents[k].X, p.d);
  }
  const double s = p.sum_scale(ens.size());
  const double p_hat = s * acc / p.d;
  const double y = income(ens.agents[i].K, prices[i], p);
  return s * p.kappa / p.d * y * p_hat / std::pow(prices[j], 1.0 + p.gamma) *
         interaction_weight(ens.agents[i].X, ens.agents[j].X, p.d);
}

std::vector<double> spending(const ExpKernel& w, const std::vector<double>& capitals,
                             const std::vector<double>& prices, const ModelParams& p) {
  const std::size_t n = capitals.size();
  std::vector<double> pg(n);
  for (std::size_t j = 0; j < n; ++j) pg[j] = std::pow(prices[j], -p.gamma);
  const std::vector<double> a = w.apply(prices);
  const std::vector<double> b = w.apply(pg);
  const double c = effective_kappa(p, n) / (p.d * p.d);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = c * income(capitals[i], prices[i], p) * a[i] * b[i];
  }
  return out;
}

}  // namespace field_econ
