#include "deferlab/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace deferlab::numkit {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("DenseMatrix: data length " + std::to_string(data_.size()) +
                                " != rows*cols " + std::to_string(rows_ * cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

DenseMatrix DenseMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                               std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) {
    throw std::out_of_range("DenseMatrix::block out of range");
  }
  DenseMatrix b(nr, nc);
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t c = 0; c < nc; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
  return b;
}

bool DenseMatrix::is_symmetric(double tol) const {
  if (!is_square()) return false;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = r + 1; c < cols_; ++c)
      if (std::abs((*this)(r, c) - (*this)(c, r)) > tol) return false;
  return true;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("DenseMatrix +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("DenseMatrix -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("DenseMatrix *: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) {
  a -= b;
  return a;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matvec: shape mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

namespace {

void require_finite(std::span<const double> v, const char* who) {
  if (v.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

}  // namespace

std::vector<double> softmax(std::span<const double> v) {
  require_finite(v, "softmax");
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    total += out[i];
  }
  for (double& o : out) o /= total;
  return out;
}

double log_sum_exp(std::span<const double> v) {
  require_finite(v, "log_sum_exp");
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - mx);
  return mx + std::log(total);
}

double sigmoid(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("sigmoid: non-finite input");
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double softplus(double v) {
  if (v > 0.0) return v + std::log1p(std::exp(-v));
  return std::log1p(std::exp(v));
}

DenseMatrix softmax_covariance(std::span<const double> q) {
  const std::size_t n = q.size();
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = (i == j ? q[i] : 0.0) - q[i] * q[j];
  return m;
}

namespace {

std::vector<double> power_start(std::size_t n) {
  // Ones vector nudged by the fractional golden-ratio sequence, so that it is
  // never orthogonal to a structured eigenvector such as the ones vector itself.
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
    v[i] = 1.0 + 0.25 * frac;
  }
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

}  // namespace

EigenEstimate top_eig_sym(const DenseMatrix& h, int iters, double tol) {
  if (!h.is_square()) throw std::invalid_argument("top_eig_sym: matrix is not square");
  if (!h.is_symmetric(1e-10)) throw std::invalid_argument("top_eig_sym: matrix is not symmetric");
  const std::size_t n = h.rows();
  EigenEstimate est;
  if (n == 0) return est;

  std::vector<double> v = power_start(n);
  double prev = dot(v, matvec(h, v));
  for (int it = 1; it <= iters; ++it) {
    std::vector<double> w = matvec(h, v);
    const double nw = norm2(w);
    est.iterations = it;
    if (nw == 0.0) {
      // v lies in the null space; on a symmetric matrix with our start vector
      // this only happens for the zero matrix.
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    const double rq = dot(v, matvec(h, v));
    if (std::abs(rq - prev) < tol) {
      est.value = rq;
      est.converged = true;
      return est;
    }
    prev = rq;
  }
  est.value = prev;
  est.converged = false;
  return est;
}

double op_norm_rect(const DenseMatrix& b, int iters, double tol) {
  if (b.rows() == 0 || b.cols() == 0) return 0.0;
  if (b.max_abs() == 0.0) return 0.0;
  const DenseMatrix gram = b.transposed() * b;
  const EigenEstimate e = top_eig_sym(gram, iters, tol * std::max(1.0, gram.max_abs()));
  return std::sqrt(std::max(0.0, e.value));
}

std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = xp[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

DenseMatrix fd_hessian(const ScalarFn& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_hessian: step must be positive");
  const std::size_t n = x.size();
  std::vector<double> xp(x.begin(), x.end());
  DenseMatrix hess(n, n);
  const double f0 = f(xp);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = xp[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double xj = xp[j];
      auto eval = [&](double si, double sj) {
        xp[i] = xi + si * h;
        xp[j] = xj + sj * h;
        const double v = f(xp);
        xp[i] = xi;
        xp[j] = xj;
        return v;
      };
      const double mixed =
          (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h * h);
      hess(i, j) = mixed;
      hess(j, i) = mixed;
    }
  }
  return hess;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: length mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  diff = std::sqrt(diff);
  const double scale = std::max({norm2(a), norm2(b), floor});
  return diff / scale;
}

}  // namespace deferlab::numkit
