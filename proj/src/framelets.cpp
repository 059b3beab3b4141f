#include "fdl/framelets.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fdl/errors.hpp"
#include "fdl/tensor_ops.hpp"

namespace fdl {
namespace {

constexpr double kPrTolerance = 1e-9;

Tensor4 probe_image(std::size_t n) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor4 y = Tensor4::image(n, n);
  for (double& v : y.data()) v = u(rng);
  return y;
}

Tensor4 synthesize(const FrameletBasis& b, const Tensor4& bands, double scale) {
  Tensor4 z = b.kind == Reconstruction::rectified ? relu(bands) : bands;
  Tensor4 out = conv2d_adjoint(b.inverse, z);
  out *= scale;
  return out;
}

}  // namespace

FrameletBasis make_basis(Tensor4 forward, Tensor4 inverse, double c,
                         std::optional<double> decimated_c, Reconstruction kind) {
  if (forward.shape() != inverse.shape() || forward.cols() != 1 || forward.rows() == 0) {
    throw ConfigError("framelet basis: forward " + forward.shape().str() + " and inverse " +
                      inverse.shape().str() + " must both be (bands x 1 x kh x kw)");
  }
  if (!(c > 0.0) || (decimated_c && !(*decimated_c > 0.0))) {
    throw ConfigError("framelet basis: reconstruction constant must be positive");
  }
  FrameletBasis b{std::move(forward), std::move(inverse), c, decimated_c, kind};
  const std::size_t n = 2 * std::max<std::size_t>({b.forward.height(), b.forward.width(), 4});
  const Tensor4 y = probe_image(n);
  if (max_abs_diff(framelet_inverse(b, framelet_forward(b, y, false), false), y) > kPrTolerance) {
    throw ConfigError("framelet basis: undecimated reconstruction is not perfect");
  }
  if (b.decimated_c &&
      max_abs_diff(framelet_inverse(b, framelet_forward(b, y, true), true), y) > kPrTolerance) {
    throw ConfigError("framelet basis: decimated reconstruction is not perfect");
  }
  return b;
}

Tensor4 HaarDWT::low() const { return slice_rows(W, 0, 1); }
Tensor4 HaarDWT::high() const { return slice_rows(W, 1, 3); }
Tensor4 HaarDWT::low_inverse() const { return slice_rows(W_tilde, 0, 1); }
Tensor4 HaarDWT::high_inverse() const { return slice_rows(W_tilde, 1, 3); }

const HaarDWT& haar_dwt() {
  static const HaarDWT dwt = [] {
    const double s = 1.0 / std::sqrt(2.0);
    const double lo[2] = {s, s}, hi[2] = {s, -s};
    const double* vert[4] = {lo, lo, hi, hi};
    const double* horz[4] = {lo, hi, lo, hi};
    Tensor4 W(4, 1, 3, 3);
    for (std::size_t band = 0; band < 4; ++band)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          W.at(band, 0, 1 + a, 1 + b) = vert[band][a] * horz[band][b];
    return HaarDWT{W, W};
  }();
  return dwt;
}

Tensor4 haar_hh_filter() { return slice_rows(haar_dwt().W, 3, 1); }

FrameletBasis haar_basis() {
  static const FrameletBasis b = make_basis(haar_dwt().W, haar_dwt().W_tilde, 0.25, 1.0);
  return b;
}

FrameletBasis identity_basis(std::size_t n) {
  Tensor4 d = Tensor4::delta(n);
  return make_basis(d, d, 1.0, std::nullopt);
}

Tensor4 framelet_forward(const FrameletBasis& basis, const Tensor4& y, bool decimated) {
  if (!y.is_image()) throw ShapeError("framelet_forward expects an image, got " + y.shape().str());
  if (decimated && !basis.decimated_c) {
    throw ConfigError("basis has no decimated reconstruction");
  }
  if (decimated && (y.height() % 2 != 0 || y.width() % 2 != 0)) {
    throw ShapeError("decimated transform needs even dims, got " + y.shape().str());
  }
  Tensor4 bands = conv2d(basis.forward, y);
  return decimated ? downsample(bands, 2) : bands;
}

Tensor4 framelet_inverse(const FrameletBasis& basis, const Tensor4& bands, bool decimated) {
  if (bands.rows() != basis.bands() || bands.cols() != 1) {
    throw ShapeError("framelet_inverse: " + bands.shape().str() + " does not carry " +
                     std::to_string(basis.bands()) + " bands");
  }
  if (decimated) {
    if (!basis.decimated_c) throw ConfigError("basis has no decimated reconstruction");
    return synthesize(basis, upsample(bands, 2), *basis.decimated_c);
  }
  return synthesize(basis, bands, basis.c);
}

FrameletBasis phase_complement(const FrameletBasis& basis) {
  if (basis.kind == Reconstruction::rectified) {
    throw ConfigError("basis is already phase-complementary");
  }
  Tensor4 K = concat_rows(basis.forward, basis.forward * -1.0);
  Tensor4 Kt = concat_rows(basis.inverse, basis.inverse * -1.0) * basis.c;
  std::optional<double> dc;
  if (basis.decimated_c) dc = *basis.decimated_c / basis.c;
  return make_basis(std::move(K), std::move(Kt), 1.0, dc, Reconstruction::rectified);
}

double PctDiagnostic::ratio() const {
  if (diag_energy > 0.0) return offdiag_energy / diag_energy;
  return offdiag_energy > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

PctDiagnostic check_phase_complementary(const Tensor4& K, const Tensor4& K_tilde, double tol) {
  if (K.shape() != K_tilde.shape()) {
    throw ShapeError("check_phase_complementary: " + K.shape().str() + " vs " +
                     K_tilde.shape().str());
  }
  const std::size_t S = 2 * std::max(K.height(), K.width()) - 1;
  const Tensor4 KI = relu(embed_centered(K, S, S));
  PctDiagnostic d;
  d.response = conv2d_adjoint(K_tilde, KI);
  const std::size_t C = K.cols(), mid = S / 2;
  double total = 0.0;
  for (double v : d.response.data()) total += v * v;
  double mean = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double v = d.response.at(c, c, mid, mid);
    d.diag_energy += v * v;
    mean += v / double(C);
  }
  d.offdiag_energy = std::max(total - d.diag_energy, 0.0);
  bool uniform = mean > 0.0;
  for (std::size_t c = 0; c < C && uniform; ++c) {
    uniform = std::abs(d.response.at(c, c, mid, mid) - mean) <= tol * mean;
  }
  d.is_pct = uniform && d.ratio() < tol;
  return d;
}

Tensor4 denoise_framelet(const FrameletBasis& basis, const Tensor4& y, const ActivationSpec& act,
                         bool decimated) {
  if (!act.is_shrinkage()) {
    throw ConfigError(std::string("denoise_framelet needs a shrinkage activation, got ") +
                      to_string(act.kind));
  }
  act.validate();
  if (act.t.size() != 1 && act.t.size() != basis.bands()) {
    throw ShapeError("denoise_framelet: expected 1 or " + std::to_string(basis.bands()) +
                     " thresholds");
  }
  Tensor4 bands = framelet_forward(basis, y, decimated);
  const std::size_t detail = bands.rows() - 1;
  if (detail > 0) {
    ActivationSpec band_act = act;
    if (act.t.size() > 1) band_act.t.assign(act.t.begin() + 1, act.t.end());
    Tensor4 shrunk = apply_activation(band_act, slice_rows(bands, 1, detail));
    bands = concat_rows(slice_rows(bands, 0, 1), shrunk);
  }
  return framelet_inverse(basis, bands, decimated);
}

std::vector<double> band_thresholds(const Tensor4& bands, double sigma_hat) {
  std::vector<double> t(bands.rows(), 0.0);
  const double n = double(bands.cols() * bands.shape().plane());
  for (std::size_t r = 1; r < bands.rows(); ++r) {
    const double* p = bands.data().data() + r * bands.cols() * bands.shape().plane();
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < std::size_t(n); ++i) mean += p[i];
    mean /= n;
    for (std::size_t i = 0; i < std::size_t(n); ++i) sq += (p[i] - mean) * (p[i] - mean);
    const double var = sq / n;
    const double sigma_x = std::sqrt(std::max(var - sigma_hat * sigma_hat, 0.0));
    if (sigma_hat <= 0.0) {
      t[r] = 0.0;
    } else if (sigma_x <= 0.0) {
      t[r] = std::numeric_limits<double>::infinity();
    } else {
      t[r] = map_threshold({sigma_hat, sigma_x / std::sqrt(2.0)});
    }
  }
  return t;
}

}  // namespace fdl
