#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace deferlab::numkit {

// Row-major dense matrix of doubles. Small (K+J <= ~100) Hessians and blocks.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  DenseMatrix transposed() const;
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;

  bool is_square() const { return rows_ == cols_; }
  bool is_symmetric(double tol = 1e-10) const;
  bool all_finite() const;
  double max_abs() const;

  DenseMatrix& operator*=(double s);
  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

// Max-shifted softmax. Throws std::invalid_argument on empty or non-finite input.
std::vector<double> softmax(std::span<const double> v);

// log(sum(exp(v))) with max-shift.
double log_sum_exp(std::span<const double> v);

// Logistic function, branching on sign so neither side overflows.
double sigmoid(double v);

// log(1 + exp(v)) without overflow.
double softplus(double v);

// Diag(q) - q q^T.
DenseMatrix softmax_covariance(std::span<const double> q);

struct EigenEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Dominant (largest-magnitude) eigenvalue of a symmetric matrix by power
// iteration from a fixed, index-perturbed ones vector. Converged once two
// successive Rayleigh quotients differ by less than `tol`.
EigenEstimate top_eig_sym(const DenseMatrix& h, int iters = 1000, double tol = 1e-10);

// Largest singular value, via power iteration on B^T B.
double op_norm_rect(const DenseMatrix& b, int iters = 1000, double tol = 1e-14);

using ScalarFn = std::function<double(std::span<const double>)>;

inline constexpr double kGradStep = 1e-5;
inline constexpr double kHessStep = 1e-4;

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h.
std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> x,
                                double h = kGradStep);

// Nested central differences; the result is symmetrized.
DenseMatrix fd_hessian(const ScalarFn& f, std::span<const double> x, double h = kHessStep);

// ||a - b|| / max(||a||, ||b||, floor).
double relative_error(std::span<const double> a, std::span<const double> b,
                      double floor = 1e-8);

}  // namespace deferlab::numkit
