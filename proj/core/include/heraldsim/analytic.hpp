#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace heraldsim::analytic {

/// Source parameters: cavity FWHM bandwidth (Hz) and the overall intensity
/// transmission folding escape, propagation and detection efficiency.
struct OpoParams {
  double gamma = 53e6;
  double eta = 0.76;

  void validate() const;
};

/// Photon-number probabilities P_0 .. P_N of a single mode.
class PhotonDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Throws InvalidArgument if any entry leaves [0,1] (beyond 1e-12 rounding)
  /// or the entries do not sum to 1 within kSumTolerance.
  explicit PhotonDistribution(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  /// P_n, zero beyond the stored support.
  double operator[](std::size_t n) const noexcept { return n < probs_.size() ? probs_[n] : 0.0; }
  double mean() const noexcept;

 private:
  std::vector<double> probs_;
};

struct OptimalFidelity {
  double plus;   // two-photon weight in the symmetric mode
  double minus;  // two-photon weight in the antisymmetric mode
};

/// F+- = 1/2 +- I/(1+I^2). Throws OutOfRange for I outside [0,1].
OptimalFidelity fidelity_optimal(double overlap);

/// 1 - (pi gamma dt / 2)^4, valid while pi gamma |dt| < 0.5 (ExpansionInvalid otherwise).
double fidelity_smalldelay_adapted(double delta_t, double gamma);

/// 1 - (pi gamma dt / sqrt 2)^2, same validity guard.
double fidelity_smalldelay_fixed(double delta_t, double gamma);

inline constexpr double kExpansionLimit = 0.5;

/// Photon statistics of the mode aligned with the first herald:
/// (0, (1-I^2)/(1+I^2), 2I^2/(1+I^2)).
PhotonDistribution fixed_mode_distribution(double overlap);

/// Pure-loss beam splitter of power transmittance eta acting on a
/// distribution supported on {0,1,2}. Throws UnsupportedSupport otherwise.
PhotonDistribution apply_loss(const PhotonDistribution& dist, double eta);

/// Inverse of apply_loss for support <= 2, for loss-corrected reporting.
/// Statistical errors are amplified by up to 1/eta^2. The result may leave
/// the probability simplex for noisy inputs, so it is returned as raw values.
std::vector<double> invert_loss(const PhotonDistribution& dist, double eta);

/// 1 + exp(-2 pi gamma |dt|) (1 + pi gamma |dt|)^2.
double g2_closed_form(double delta_t, double gamma);

/// Lossy two-photon weight of the symmetric mode, eta^2 F+(I). Exact for the
/// uniform loss channel: both photons must survive.
double two_photon_weight_with_loss(double overlap, double eta);

/// fixed_mode_distribution followed by apply_loss.
PhotonDistribution fixed_mode_distribution_with_loss(double overlap, double eta);

/// Delay at which the lossless fixed-mode two-photon weight halves, i.e.
/// I(dt)^2 = 1/3 (bisection on the closed-form overlap).
double fixed_mode_half_decay_delay(double gamma);

}  // namespace heraldsim::analytic
