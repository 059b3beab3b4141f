#pragma once

#include <optional>

#include "fdl/activations.hpp"
#include "fdl/tensor.hpp"

namespace fdl {

enum class Reconstruction { linear, rectified };

// Analysis filters F and synthesis filters F~, both (bands x 1 x kh x kw).
// Undecimated: c * F~^T (F y) = y. Decimated (factor 2), when decimated_c is
// set: decimated_c * F~^T up(down(F y)) = y. A rectified basis reconstructs
// through a ReLU: c * F~^T (F y)+ = y.
struct FrameletBasis {
  Tensor4 forward;
  Tensor4 inverse;
  double c = 1.0;
  std::optional<double> decimated_c;
  Reconstruction kind = Reconstruction::linear;

  std::size_t bands() const { return forward.rows(); }
};

// Checks shapes and perfect reconstruction on a random probe; throws
// ConfigError if either fails.
FrameletBasis make_basis(Tensor4 forward, Tensor4 inverse, double c,
                         std::optional<double> decimated_c = std::nullopt,
                         Reconstruction kind = Reconstruction::linear);

// Orthonormal 2-D Haar, taps +-1/2, stored in 3x3 filters (taps at the centre
// and one step after it). Band order LL, LH, HL, HH.
struct HaarDWT {
  Tensor4 W;
  Tensor4 W_tilde;

  Tensor4 low() const;   // W_L: 1 band
  Tensor4 high() const;  // W_H: 3 bands
  Tensor4 low_inverse() const;
  Tensor4 high_inverse() const;
};

const HaarDWT& haar_dwt();
// Diagonal detail filter f_HH as a (1 x 1 x 3 x 3) kernel.
Tensor4 haar_hh_filter();

// Haar framelet: undecimated c = 1/4, decimated c = 1.
FrameletBasis haar_basis();
// Single delta filter, c = 1.
FrameletBasis identity_basis(std::size_t n = 1);

Tensor4 framelet_forward(const FrameletBasis& basis, const Tensor4& y, bool decimated);
Tensor4 framelet_inverse(const FrameletBasis& basis, const Tensor4& bands, bool decimated);

// K = (F; -F), K~ = (F~; -F~) * c, so that K~^T (K y)+ = y with c = 1.
FrameletBasis phase_complement(const FrameletBasis& basis);

struct PctDiagnostic {
  Tensor4 response;  // (C x C x S x S), S = 2 * filter size - 1
  double diag_energy = 0.0;
  double offdiag_energy = 0.0;
  bool is_pct = false;

  double ratio() const;
};

// Response K~^T (K I)+ of a filter pair with K, K~ both (B x C x k x k): the
// identity input feeds one delta per input channel. The pair is judged
// phase-complementary when the off-diagonal energy (everything except the
// centre taps of the diagonal entries) is below tol * diag energy and the
// diagonal centres agree to within tol.
PctDiagnostic check_phase_complementary(const Tensor4& K, const Tensor4& K_tilde,
                                        double tol = 0.05);

// Forward, shrink the detail bands (all but band 0), inverse. Thresholds in
// `act` are scalar or one per band.
Tensor4 denoise_framelet(const FrameletBasis& basis, const Tensor4& y, const ActivationSpec& act,
                         bool decimated = false);

// Per-band thresholds t = sigma^2 / sigma_d from the band variance and a
// noise estimate, with sigma_d = sqrt(max(var - sigma^2, 0) / 2). Band 0 gets
// a zero entry. Assumes unit-norm analysis filters.
std::vector<double> band_thresholds(const Tensor4& bands, double sigma_hat);

}  // namespace fdl
