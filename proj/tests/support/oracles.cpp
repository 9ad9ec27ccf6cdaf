#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace deferlab::testing {

using quad = boost::multiprecision::cpp_bin_float_quad;

std::vector<double> quad_softmax(std::span<const double> v) {
  std::vector<quad> e(v.size());
  quad sum = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    e[i] = boost::multiprecision::exp(quad(v[i]));
    sum += e[i];
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(e[i] / sum);
  return out;
}

double quad_sigmoid(double v) {
  const quad one = 1;
  return static_cast<double>(one / (one + boost::multiprecision::exp(-quad(v))));
}

std::vector<double> jacobi_eigenvalues(const numkit::DenseMatrix& m, double tol, int max_sweeps) {
  if (!m.is_square()) throw std::invalid_argument("jacobi_eigenvalues: matrix not square");
  const std::size_t n = m.rows();
  numkit::DenseMatrix a = m;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) < tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

numkit::DenseMatrix random_symmetric(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  numkit::DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

numkit::DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                  double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  numkit::DenseMatrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a(i, j) = u(rng);
  return a;
}

Instance random_instance(std::mt19937_64& rng, int K, int J, double scale, double p_correct) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::uniform_int_distribution<int> cls(0, K - 1);
  std::bernoulli_distribution hit(p_correct);
  Instance inst;
  inst.K = K;
  inst.J = J;
  inst.z.resize(static_cast<std::size_t>(K + J));
  for (double& v : inst.z) v = u(rng);
  inst.sample.x = {1.0};
  inst.sample.y = cls(rng);
  inst.sample.m.resize(static_cast<std::size_t>(J));
  for (int& m : inst.sample.m) {
    if (hit(rng)) {
      m = inst.sample.y;
    } else {
      std::uniform_int_distribution<int> other(1, K - 1);
      m = (inst.sample.y + other(rng)) % K;
    }
  }
  return inst;
}

double top_gap(std::span<const double> v, std::size_t lo, std::size_t hi) {
  double first = -std::numeric_limits<double>::infinity(), second = first;
  for (std::size_t i = lo; i < hi; ++i) {
    if (v[i] > first) {
      second = first;
      first = v[i];
    } else if (v[i] > second) {
      second = v[i];
    }
  }
  return first - second;
}

double correct_expert_gap(const Instance& inst) {
  std::vector<double> a;
  for (int j = 0; j < inst.J; ++j)
    if (inst.sample.m[static_cast<std::size_t>(j)] == inst.sample.y)
      a.push_back(inst.z[static_cast<std::size_t>(inst.K + j)]);
  if (a.size() < 2) return std::numeric_limits<double>::infinity();
  return top_gap(a, 0, a.size());
}

Instance tie_free_instance(std::mt19937_64& rng, int K, int J) {
  for (;;) {
    Instance inst = random_instance(rng, K, J);
    if (top_gap(inst.z, 0, static_cast<std::size_t>(K)) > 1e-3 && correct_expert_gap(inst) > 1e-3)
      return inst;
  }
}

numkit::ScalarFn frozen_loss(const SurrogateConfig& cfg, const Instance& inst) {
  if (cfg.kind == SurrogateKind::PiCCE) {
    const auto jstar = picce_loss_grad(to_aug(inst.K, inst.z), inst.sample).inter.jstar;
    return [=](std::span<const double> a) {
      return picce_loss_grad(to_aug(inst.K, a), inst.sample, jstar).loss;
    };
  }
  return [=](std::span<const double> a) { return loss_value(cfg, inst.K, a, inst.sample); };
}

double max_abs_diff(const numkit::DenseMatrix& a, const numkit::DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

}  // namespace deferlab::testing
