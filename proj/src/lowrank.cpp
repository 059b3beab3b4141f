#include "fdl/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fdl/errors.hpp"
#include "fdl/experiments.hpp"

namespace fdl {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_image(const Tensor4& image) {
  if (!image.is_image()) throw ShapeError("expected an image, got " + image.shape().str());
  Matrix m(image.height(), image.width());
  m.data = image.data();
  return m;
}

Tensor4 Matrix::to_image() const { return Tensor4(Shape{1, 1, rows, cols}, data); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double v = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += v * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("frobenius_distance: shapes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return std::sqrt(s);
}

namespace {

// Column-major scratch for the Jacobi sweeps: column j is cols[j].
using Columns = std::vector<std::vector<double>>;

double col_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Tall case, m >= n.
SVDFactors jacobi_tall(const Matrix& a) {
  const std::size_t m = a.rows, n = a.cols;
  Columns u(n, std::vector<double>(m)), v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) u[j][i] = a(i, j);
    v[j][j] = 1.0;
  }
  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = col_dot(u[p], u[p]), beta = col_dot(u[q], u[q]);
        const double gamma = col_dot(u[p], u[q]);
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u[p][i], uq = u[q][i];
          u[p][i] = c * up - s * uq;
          u[q][i] = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(u[j], u[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double smax = n ? sigma[order[0]] : 0.0;
  const double tiny = std::max(smax, 1.0) * 1e-13;
  SVDFactors f{Matrix(m, n), Matrix(n, n), std::vector<double>(n)};
  std::vector<std::size_t> missing;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    f.sigma[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) f.V(i, k) = v[j][i];
    if (sigma[j] > tiny) {
      for (std::size_t i = 0; i < m; ++i) f.U(i, k) = u[j][i] / sigma[j];
    } else {
      f.sigma[k] = 0.0;
      missing.push_back(k);
    }
  }
  // Gram-Schmidt against the columns already set, seeded with unit vectors.
  std::size_t seed = 0;
  for (std::size_t k : missing) {
    for (; seed < m; ++seed) {
      std::vector<double> e(m, 0.0);
      e[seed] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t c = 0; c < n; ++c) {
          // unfilled columns are still zero and drop out
          double d = 0.0;
          for (std::size_t i = 0; i < m; ++i) d += f.U(i, c) * e[i];
          for (std::size_t i = 0; i < m; ++i) e[i] -= d * f.U(i, c);
        }
      const double nrm = std::sqrt(col_dot(e, e));
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < m; ++i) f.U(i, k) = e[i] / nrm;
        ++seed;
        break;
      }
    }
  }
  // First nonzero entry of each u_n positive.
  for (std::size_t k = 0; k < n; ++k) {
    double first = 0.0;
    for (std::size_t i = 0; i < m && first == 0.0; ++i)
      if (std::abs(f.U(i, k)) > 1e-14) first = f.U(i, k);
    if (first < 0.0) {
      for (std::size_t i = 0; i < m; ++i) f.U(i, k) = -f.U(i, k);
      for (std::size_t i = 0; i < n; ++i) f.V(i, k) = -f.V(i, k);
    }
  }
  return f;
}

}  // namespace

SVDFactors svd(const Matrix& y) {
  for (double v : y.data)
    if (!std::isfinite(v)) throw NumericError("svd: non-finite entry");
  if (y.rows >= y.cols) return jacobi_tall(y);
  SVDFactors t = jacobi_tall(transpose(y));
  SVDFactors f{std::move(t.V), std::move(t.U), std::move(t.sigma)};
  for (std::size_t k = 0; k < f.sigma.size(); ++k) {
    double first = 0.0;
    for (std::size_t i = 0; i < f.U.rows && first == 0.0; ++i)
      if (std::abs(f.U(i, k)) > 1e-14) first = f.U(i, k);
    if (first < 0.0) {
      for (std::size_t i = 0; i < f.U.rows; ++i) f.U(i, k) = -f.U(i, k);
      for (std::size_t i = 0; i < f.V.rows; ++i) f.V(i, k) = -f.V(i, k);
    }
  }
  return f;
}

Matrix lowrank_approx(const SVDFactors& f, std::size_t rank) {
  if (rank < 1 || rank > f.sigma.size()) {
    throw DomainError("rank must lie in [1, " + std::to_string(f.sigma.size()) + "], got " +
                      std::to_string(rank));
  }
  Matrix out(f.U.rows, f.V.rows);
  for (std::size_t n = 0; n < rank; ++n) {
    const double s = f.sigma[n];
    for (std::size_t i = 0; i < out.rows; ++i) {
      const double us = f.U(i, n) * s;
      for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += us * f.V(j, n);
    }
  }
  return out;
}

LowRankDemoReport lowrank_denoise_demo(const Tensor4& x, double sigma,
                                       const std::vector<std::size_t>& ranks, std::uint64_t seed) {
  const Tensor4 y = add_noise(x, NoiseModel{sigma, seed});
  const SVDFactors fx = svd(Matrix::from_image(x));
  const SVDFactors fy = svd(Matrix::from_image(y));
  LowRankDemoReport r;
  r.ranks = ranks;
  r.snr_noisy_input = snr_db(x, y);
  for (std::size_t k : ranks) {
    r.recon_clean.push_back(lowrank_approx(fx, k).to_image());
    r.recon_noisy.push_back(lowrank_approx(fy, k).to_image());
    r.snr_clean.push_back(snr_db(x, r.recon_clean.back()));
    r.snr_noisy.push_back(snr_db(x, r.recon_noisy.back()));
  }
  return r;
}

}  // namespace fdl
