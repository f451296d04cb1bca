#include "heraldsim/analytic.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "heraldsim/error.hpp"
#include "heraldsim/modes.hpp"

namespace heraldsim::analytic {

namespace {

void require_unit_interval(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, std::string(what) + " must lie in [0, 1]");
  }
}

double expansion_parameter(double delta_t, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidGamma, "gamma must be positive");
  const double x = std::numbers::pi * gamma * std::abs(delta_t);
  if (!(x < kExpansionLimit)) {
    throw Error(ErrorCode::ExpansionInvalid, "small-delay expansion needs pi*gamma*|dt| < 0.5");
  }
  return x;
}

}  // namespace

void OpoParams::validate() const {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidGamma, "gamma must be positive");
  require_unit_interval(eta, "eta");
}

PhotonDistribution::PhotonDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(ErrorCode::InvalidArgument, "empty photon distribution");
  for (double p : probs_) {
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) {
      throw Error(ErrorCode::InvalidArgument, "photon probability outside [0, 1]");
    }
  }
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::InvalidArgument, "photon probabilities do not sum to one");
  }
}

double PhotonDistribution::mean() const noexcept {
  double m = 0.0;
  for (std::size_t n = 0; n < probs_.size(); ++n) m += static_cast<double>(n) * probs_[n];
  return m;
}

OptimalFidelity fidelity_optimal(double overlap) {
  require_unit_interval(overlap, "overlap");
  const double d = overlap / (1.0 + overlap * overlap);
  return {0.5 + d, 0.5 - d};
}

double fidelity_smalldelay_adapted(double delta_t, double gamma) {
  const double x = expansion_parameter(delta_t, gamma) / 2.0;
  return 1.0 - x * x * x * x;
}

double fidelity_smalldelay_fixed(double delta_t, double gamma) {
  const double x = expansion_parameter(delta_t, gamma) / std::numbers::sqrt2;
  return 1.0 - x * x;
}

PhotonDistribution fixed_mode_distribution(double overlap) {
  require_unit_interval(overlap, "overlap");
  const double i2 = overlap * overlap;
  const double p2 = 2.0 * i2 / (1.0 + i2);
  // P1 = 1 - P2 keeps the sum exact; algebraically equal to (1-I^2)/(1+I^2).
  return PhotonDistribution({0.0, 1.0 - p2, p2});
}

PhotonDistribution apply_loss(const PhotonDistribution& dist, double eta) {
  require_unit_interval(eta, "eta");
  for (std::size_t n = 3; n < dist.size(); ++n) {
    if (dist[n] > 0.0) {
      throw Error(ErrorCode::UnsupportedSupport, "loss model is defined for support <= 2");
    }
  }
  const double p0 = dist[0];
  const double p1 = dist[1];
  const double p2 = dist[2];
  const double l = 1.0 - eta;
  const double q2 = p2 * eta * eta;
  const double q1 = 2.0 * p2 * eta * l + p1 * eta;
  const double q0 = p2 * l * l + p1 * l + p0;
  return PhotonDistribution({q0, q1, q2});
}

std::vector<double> invert_loss(const PhotonDistribution& dist, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "loss inversion needs 0 < eta <= 1");
  }
  const double p2 = dist[2] / (eta * eta);
  const double p1 = (dist[1] - 2.0 * p2 * eta * (1.0 - eta)) / eta;
  return {1.0 - p1 - p2, p1, p2};
}

double g2_closed_form(double delta_t, double gamma) {
  const double I = modes::overlap_closed_form(delta_t, gamma);
  return 1.0 + I * I;
}

double two_photon_weight_with_loss(double overlap, double eta) {
  require_unit_interval(eta, "eta");
  return eta * eta * fidelity_optimal(overlap).plus;
}

PhotonDistribution fixed_mode_distribution_with_loss(double overlap, double eta) {
  return apply_loss(fixed_mode_distribution(overlap), eta);
}

double fixed_mode_half_decay_delay(double gamma) {
  const double target = 1.0 / std::sqrt(3.0);
  double lo = 0.0;
  double hi = 1.0 / gamma;
  while (modes::overlap_closed_form(hi, gamma) > target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (modes::overlap_closed_form(mid, gamma) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace heraldsim::analytic
