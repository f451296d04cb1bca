#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/homodyne.hpp"

namespace heraldsim::tomo {

/// Phase-averaged homodyne POVM binned over [-8, 8]:
/// elements(n, b) = integral over bin b of |psi_n(x)|^2.
struct BinnedPovm {
  int cutoff = 0;
  std::vector<double> edges;  // n_bins + 1 edges
  Eigen::MatrixXd elements;   // (cutoff + 1) x n_bins

  std::size_t n_bins() const noexcept { return edges.size() - 1; }
  double bin_width() const noexcept { return edges[1] - edges[0]; }
  double bin_center(std::size_t b) const noexcept { return 0.5 * (edges[b] + edges[b + 1]); }
  /// Bin index of x, or n_bins() when x falls outside the range.
  std::size_t bin_of(double x) const noexcept;
};

/// Throws InvalidArgument for n_bins < 64 or cutoff outside [0, 40].
BinnedPovm build_povm(int cutoff, std::size_t n_bins);

struct MLConfig {
  int cutoff = 5;
  int max_iters = 2000;
  double tol = 1e-10;  // relative change of the log-likelihood
  std::size_t n_bins = 256;
  std::size_t n_phase_bins = 32;  // ml_full only

  void validate() const;
};

struct DiagonalEstimate {
  analytic::PhotonDistribution dist{std::vector<double>{1.0}};
  std::vector<double> standard_errors;  // from the observed Fisher information
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t n_samples = 0;
  std::size_t n_dropped = 0;  // samples outside the POVM range
  std::vector<double> log_likelihood_history;
  std::vector<std::string> warnings;
};

/// Expectation-maximization over the binned phase-averaged POVM, started
/// from the uniform distribution. The likelihood is concave in P, so the
/// start only changes the iteration count. Never throws for slow
/// convergence: the last (best) iterate is returned with converged = false.
///
/// Throws EmptyInput when no sample falls inside the POVM range.
DiagonalEstimate ml_diagonal(std::span<const double> samples, const MLConfig& config = {});

/// Same estimator on pre-binned counts.
DiagonalEstimate ml_diagonal_counts(std::span<const double> counts, const BinnedPovm& povm,
                                    const MLConfig& config);

struct DensityEstimate {
  Eigen::MatrixXcd rho;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood_history;
};

/// Iterative R(rho) rho R(rho) reconstruction with phase-resolved bins
/// (n_bins quadrature bins x n_phase_bins phase bins). Output is Hermitian
/// PSD with unit trace. Throws EmptyInput.
DensityEstimate ml_full(std::span<const homodyne::QuadratureSample> samples,
                        const MLConfig& config = {});

/// Fidelity to the Fock state |n>, i.e. P_n. Throws CutoffExceeded when n
/// is beyond the distribution's support.
double fock_fidelity(const analytic::PhotonDistribution& dist, int n);

/// {cutoff, probs[], log_likelihood, iterations, converged, standard_errors[]}
void write_estimate_json(std::ostream& out, const DiagonalEstimate& estimate);

}  // namespace heraldsim::tomo
