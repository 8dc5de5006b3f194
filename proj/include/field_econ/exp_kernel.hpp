#pragma once

#include <cstddef>
#include <vector>

namespace field_econ {

enum class KernelMode { kAuto, kDense, kSorted };

// Sums of the 1-D exponential kernel w_ij = exp(-rate * |x_i - x_j|).
//
// kDense keeps the N x N matrix and sums each row in index order. kSorted
// sorts once and runs two linear recurrences (left and right sweeps), which
// is exact up to rounding because exp(-rate*(a-c)) = exp(-rate*(a-b)) *
// exp(-rate*(b-c)) for a >= b >= c. Equal positions are grouped so that
// sign(0) = 0 holds exactly in the signed sums.
class ExpKernel {
 public:
  static constexpr std::size_t kDenseLimit = 512;
  static constexpr std::size_t kDenseTripletLimit = 96;

  ExpKernel(std::vector<double> x, double rate, KernelMode mode = KernelMode::kAuto);

  std::size_t size() const { return x_.size(); }
  bool dense() const { return dense_; }

  // out_i = sum_j w_ij v_j, self term included.
  void apply(const double* v, double* out) const;
  std::vector<double> apply(const std::vector<double>& v) const;

  // out_i = sum_j sign(x_i - x_j) w_ij v_j.
  void apply_signed(const double* v, double* out) const;
  std::vector<double> apply_signed(const std::vector<double>& v) const;

  // out_i = sum over unordered pairs {j,k} with j,k != i of
  //   (sign(x_i-x_j) + sign(x_i-x_k)) * exp(-rate * (d_ij + d_ik + d_jk)),
  // i.e. the derivative pattern of the triplet kernel with respect to x_i.
  std::vector<double> triplet_gradient() const;

 private:
  struct Group {
    std::size_t begin;  // offset into order_
    std::size_t end;
  };

  void build_sorted();

  std::vector<double> x_;
  double rate_;
  bool dense_;
  bool triplet_dense_;
  std::vector<double> w_;             // dense matrix, row-major
  std::vector<std::size_t> order_;    // agents sorted by (x, index)
  std::vector<Group> groups_;         // runs of equal x in order_
  std::vector<double> gap_decay_;     // exp(-rate * (x_g - x_{g-1})) per group, [0] unused
  std::vector<double> gap_decay2_;    // same with 2*rate, for triplets
};

}  // namespace field_econ
