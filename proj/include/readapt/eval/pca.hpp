#pragma once

#include <cmath>
#include <vector>

#include "readapt/autodiff/tensor.hpp"
#include "readapt/errors.hpp"

namespace readapt {

struct PcaResult {
  Tensor components;                    // k × d, unit rows
  std::vector<double> eigenvalues;      // covariance eigenvalues, descending
  std::vector<double> explained;        // eigenvalue / total variance
  Tensor projections;                   // n × k
};

struct PcaOptions {
  std::size_t components = 2;
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

namespace detail {

// A few Rayleigh-quotient steps, (C - mu I) y = v with mu = v'Cv, on the
// power-iteration result. The step-size stop rule leaves an error of about
// step / (1 - lambda2 / lambda1), far above it when the top eigenvalues are
// close; these steps converge cubically from there. Returns the eigenvalue.
inline double refine_eigenpair(const Tensor& cov, std::vector<double>& v) {
  const std::size_t d = v.size();
  auto rayleigh = [&] {
    double mu = 0.0;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) mu += v[a] * cov(a, b) * v[b];
    return mu;
  };
  double mu = rayleigh();
  for (int step = 0; step < 3; ++step) {
    std::vector<double> m(d * d), y = v;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) m[a * d + b] = cov(a, b) - (a == b ? mu : 0.0);
    // Gaussian elimination with partial pivoting.
    bool singular = false;
    for (std::size_t c = 0; c < d && !singular; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < d; ++r)
        if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) piv = r;
      if (m[piv * d + c] == 0.0) {
        singular = true;  // mu is an exact eigenvalue: v is already its vector
        break;
      }
      if (piv != c) {
        for (std::size_t b = 0; b < d; ++b) std::swap(m[c * d + b], m[piv * d + b]);
        std::swap(y[c], y[piv]);
      }
      for (std::size_t r = c + 1; r < d; ++r) {
        const double f = m[r * d + c] / m[c * d + c];
        for (std::size_t b = c; b < d; ++b) m[r * d + b] -= f * m[c * d + b];
        y[r] -= f * y[c];
      }
    }
    if (singular) break;
    for (std::size_t c = d; c-- > 0;) {
      for (std::size_t b = c + 1; b < d; ++b) y[c] -= m[c * d + b] * y[b];
      y[c] /= m[c * d + c];
    }
    double norm = 0.0;
    for (double t : y) norm += t * t;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm) || norm == 0.0) break;
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += y[j] * v[j];
    for (std::size_t j = 0; j < d; ++j) v[j] = (dot < 0 ? -y[j] : y[j]) / norm;
    mu = rayleigh();
  }
  return mu;
}

}  // namespace detail

/// Principal components of the rows of `x` by power iteration with
/// deflation on the covariance matrix, each eigenvector polished by
/// refine_eigenpair. Each component's first nonzero
/// coordinate is made positive.
inline PcaResult pca_project(const Tensor& x, const PcaOptions& opt = {}) {
  const std::size_t n = x.rows(), d = x.cols();
  require(x.rank() == 2 && n >= 3, "pca_project: need at least 3 vectors");
  require(opt.components >= 1 && opt.components <= d, "pca_project: component count out of range");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  for (auto& m : mean) m /= static_cast<double>(n);
  Tensor centered = x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) -= mean[j];

  Tensor cov = Tensor::matrix(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(a, b) += centered(i, a) * centered(i, b);
  double total = 0.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) cov(a, b) /= static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a) total += cov(a, a);
  if (!(total > 0.0)) throw DegeneracyError("pca_project: data has zero variance");

  PcaResult r;
  r.components = Tensor::matrix(opt.components, d);
  std::vector<double> v(d), w(d);
  for (std::size_t k = 0; k < opt.components; ++k) {
    // Deterministic start, kept away from already-found directions.
    for (std::size_t j = 0; j < d; ++j) v[j] = 1.0 + 0.1 * static_cast<double>(j + k);
    double lambda = 0.0;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      for (std::size_t a = 0; a < d; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < d; ++b) s += cov(a, b) * v[b];
        w[a] = s;
      }
      double norm = 0.0;
      for (double t : w) norm += t * t;
      norm = std::sqrt(norm);
      if (norm < 1e-300) {  // remaining variance is zero: any orthogonal direction will do
        lambda = 0.0;
        for (std::size_t j = 0; j < d; ++j) v[j] = (j == k) ? 1.0 : 0.0;
        for (std::size_t p = 0; p < k; ++p) {
          double dp = 0.0;
          for (std::size_t j = 0; j < d; ++j) dp += v[j] * r.components(p, j);
          for (std::size_t j = 0; j < d; ++j) v[j] -= dp * r.components(p, j);
        }
        double vn = 0.0;
        for (double t : v) vn += t * t;
        for (auto& t : v) t /= std::sqrt(vn);
        break;
      }
      double delta = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        w[j] /= norm;
        delta = std::max(delta, std::abs(w[j] - v[j]));
      }
      v.swap(w);
      lambda = norm;
      if (delta < opt.tolerance) break;
    }
    if (lambda > 0.0) lambda = detail::refine_eigenpair(cov, v);
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(v[j]) > 1e-12) {
        if (v[j] < 0)
          for (auto& t : v) t = -t;
        break;
      }
    for (std::size_t j = 0; j < d; ++j) r.components(k, j) = v[j];
    r.eigenvalues.push_back(lambda);
    r.explained.push_back(lambda / total);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(a, b) -= lambda * v[a] * v[b];
  }

  r.projections = Tensor::matrix(n, opt.components);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < opt.components; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += centered(i, j) * r.components(k, j);
      r.projections(i, k) = s;
    }
  return r;
}

}  // namespace readapt
