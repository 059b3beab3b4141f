#pragma once

#include <cstdint>
#include <vector>

#include "fdl/tensor.hpp"

namespace fdl {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n);
  static Matrix from_image(const Tensor4& image);
  Tensor4 to_image() const;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double frobenius_distance(const Matrix& a, const Matrix& b);

// Thin SVD, y = U diag(sigma) V^T with k = min(rows, cols) columns in U and V.
// sigma is descending; each u_n has its first nonzero entry positive.
struct SVDFactors {
  Matrix U;
  Matrix V;
  std::vector<double> sigma;
};

// One-sided Jacobi. Deterministic.
SVDFactors svd(const Matrix& y);

// Sum of the first `rank` rank-one terms.
Matrix lowrank_approx(const SVDFactors& f, std::size_t rank);

struct LowRankDemoReport {
  std::vector<std::size_t> ranks;
  double snr_noisy_input = 0.0;
  std::vector<double> snr_clean;  // reconstruction of x vs x
  std::vector<double> snr_noisy;  // reconstruction of y vs x
  std::vector<Tensor4> recon_clean;
  std::vector<Tensor4> recon_noisy;
};

LowRankDemoReport lowrank_denoise_demo(const Tensor4& x, double sigma,
                                       const std::vector<std::size_t>& ranks,
                                       std::uint64_t seed = 1);

}  // namespace fdl
