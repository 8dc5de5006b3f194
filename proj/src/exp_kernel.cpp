#include "field_econ/exp_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace field_econ {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

ExpKernel::ExpKernel(std::vector<double> x, double rate, KernelMode mode)
    : x_(std::move(x)), rate_(rate) {
  const std::size_t n = x_.size();
  dense_ = mode == KernelMode::kDense || (mode == KernelMode::kAuto && n <= kDenseLimit);
  triplet_dense_ =
      mode == KernelMode::kDense || (mode == KernelMode::kAuto && n <= kDenseTripletLimit);
  if (dense_) {
    w_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        w_[i * n + j] = std::exp(-rate_ * std::fabs(x_[i] - x_[j]));
      }
    }
  }
  if (!dense_ || !triplet_dense_) build_sorted();
}

void ExpKernel::build_sorted() {
  const std::size_t n = x_.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(), [this](std::size_t a, std::size_t b) {
    return x_[a] < x_[b] || (x_[a] == x_[b] && a < b);
  });
  groups_.clear();
  gap_decay_.clear();
  gap_decay2_.clear();
  std::size_t start = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k == n || x_[order_[k]] != x_[order_[start]]) {
      if (groups_.empty()) {
        gap_decay_.push_back(0.0);
        gap_decay2_.push_back(0.0);
      } else {
        const double gap = x_[order_[start]] - x_[order_[groups_.back().begin]];
        gap_decay_.push_back(std::exp(-rate_ * gap));
        gap_decay2_.push_back(std::exp(-2.0 * rate_ * gap));
      }
      groups_.push_back({start, k});
      start = k;
    }
  }
}

void ExpKernel::apply(const double* v, double* out) const {
  const std::size_t n = x_.size();
  if (dense_) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &w_[i * n];
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
      out[i] = acc;
    }
    return;
  }
  // below: strictly smaller x; above: strictly larger x; plus own group.
  std::vector<double> below(groups_.size()), above(groups_.size()), own(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    double s = 0.0;
    for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) s += v[order_[k]];
    own[g] = s;
  }
  double acc = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (g > 0) acc = (acc + own[g - 1]) * gap_decay_[g];
    below[g] = acc;
  }
  acc = 0.0;
  for (std::size_t g = groups_.size(); g-- > 0;) {
    if (g + 1 < groups_.size()) acc = (acc + own[g + 1]) * gap_decay_[g + 1];
    above[g] = acc;
  }
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const double total = (below[g] + above[g]) + own[g];
    for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) out[order_[k]] = total;
  }
}

std::vector<double> ExpKernel::apply(const std::vector<double>& v) const {
  std::vector<double> out(v.size());
  apply(v.data(), out.data());
  return out;
}

void ExpKernel::apply_signed(const double* v, double* out) const {
  const std::size_t n = x_.size();
  if (dense_) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &w_[i * n];
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += sign_of(x_[i] - x_[j]) * row[j] * v[j];
      out[i] = acc;
    }
    return;
  }
  std::vector<double> below(groups_.size()), above(groups_.size()), own(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    double s = 0.0;
    for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) s += v[order_[k]];
    own[g] = s;
  }
  double acc = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (g > 0) acc = (acc + own[g - 1]) * gap_decay_[g];
    below[g] = acc;
  }
  acc = 0.0;
  for (std::size_t g = groups_.size(); g-- > 0;) {
    if (g + 1 < groups_.size()) acc = (acc + own[g + 1]) * gap_decay_[g + 1];
    above[g] = acc;
  }
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const double total = below[g] - above[g];
    for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) out[order_[k]] = total;
  }
}

std::vector<double> ExpKernel::apply_signed(const std::vector<double>& v) const {
  std::vector<double> out(v.size());
  apply_signed(v.data(), out.data());
  return out;
}

std::vector<double> ExpKernel::triplet_gradient() const {
  const std::size_t n = x_.size();
  std::vector<double> out(n, 0.0);
  if (triplet_dense_) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t k = j + 1; k < n; ++k) {
          if (k == i) continue;
          const int s = sign_of(x_[i] - x_[j]) + sign_of(x_[i] - x_[k]);
          if (s == 0) continue;
          const double dsum =
              std::fabs(x_[i] - x_[j]) + std::fabs(x_[i] - x_[k]) + std::fabs(x_[j] - x_[k]);
          acc += s * std::exp(-rate_ * dsum);
        }
      }
      out[i] = acc;
    }
    return out;
  }
  // On a line d_ij + d_ik + d_jk = 2 * (max - min). For agent i at x only
  // pairs lying entirely on one side contribute with weight 2, and pairs with
  // one partner tied at x contribute with weight 1:
  //   below: 2 T_b + (m-1) S_b,  above: 2 T_a + (m-1) S_a
  // S = sum over strictly-lower points of e^{-2 rate (x - x_j)},
  // T = sum over strictly-lower unordered pairs of e^{-2 rate (x - min)}.
  const std::size_t ng = groups_.size();
  std::vector<double> below(ng), above(ng);
  double S = 0.0, T = 0.0;
  for (std::size_t g = 0; g < ng; ++g) {
    const double m = static_cast<double>(groups_[g].end - groups_[g].begin);
    if (g > 0) {
      S *= gap_decay2_[g];
      T *= gap_decay2_[g];
    }
    below[g] = 2.0 * T + (m - 1.0) * S;
    T += S * m + 0.5 * m * (m - 1.0);
    S += m;
  }
  S = 0.0;
  T = 0.0;
  for (std::size_t g = ng; g-- > 0;) {
    const double m = static_cast<double>(groups_[g].end - groups_[g].begin);
    if (g + 1 < ng) {
      S *= gap_decay2_[g + 1];
      T *= gap_decay2_[g + 1];
    }
    above[g] = 2.0 * T + (m - 1.0) * S;
    T += S * m + 0.5 * m * (m - 1.0);
    S += m;
  }
  for (std::size_t g = 0; g < ng; ++g) {
    const double total = below[g] - above[g];
    for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) out[order_[k]] = total;
  }
  return out;
}

}  // namespace field_econ
