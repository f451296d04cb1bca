#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/modes.hpp"
#include "heraldsim/random.hpp"

// Quadrature convention used throughout: x = (a + a^dagger) / sqrt(2), so the
// vacuum has variance 1/2. A quadrature at LO phase theta measures
// x_theta = (a e^{-i theta} + a^dagger e^{i theta}) / sqrt(2), and
// <n | x_theta> = e^{i n theta} psi_n(x) with psi_n the Hermite functions.

namespace heraldsim::homodyne {

using Matrix = Eigen::MatrixXcd;

/// Sampling range [-kRange, kRange]; probability mass outside is below 1e-20
/// for photon numbers up to 5.
inline constexpr double kRange = 8.0;
inline constexpr std::size_t kGridPoints1D = std::size_t{1} << 14;
inline constexpr std::size_t kGridCells2D = 512;
inline constexpr int kMaxPhotonNumber = 40;

struct QuadratureSample {
  double x = 0.0;
  double theta = 0.0;
};

struct JointQuadratureSample {
  double x_f1 = 0.0;
  double x_f2 = 0.0;
  double theta = 0.0;
};

/// psi_0 .. psi_n_max at x (normalized Hermite functions).
std::vector<double> fock_wavefunctions(int n_max, double x);

/// |psi_n(x)|^2. Throws CutoffExceeded for n outside [0, kMaxPhotonNumber].
double fock_quadrature_pdf(int n, double x);

/// sum_n P_n |psi_n(x)|^2, the density of a phase-averaged state.
double mixture_pdf(const analytic::PhotonDistribution& dist, double x);

/// <x_theta| rho |x_theta> for a single-mode density matrix.
double quadrature_pdf(const Matrix& rho, double x, double theta);

/// Throws InvalidDensity unless rho is a square Hermitian PSD unit-trace
/// matrix (tolerance 1e-8).
void validate_density(const Matrix& rho);

/// Inverse-CDF sampler for x at a uniformly random LO phase. The CDF at
/// phase theta is assembled from precomputed cumulative tables of each
/// coherence order, so phase-dependent states cost O(orders * log grid) per
/// draw.
class QuadratureSampler {
 public:
  explicit QuadratureSampler(const Matrix& rho);

  QuadratureSample draw(Rng& rng) const;
  double draw_at(double theta, Rng& rng) const;

 private:
  double cdf_at(std::size_t k, double theta) const;

  std::vector<double> x_;
  // cumulative_[d] holds the cumulative table of the order-d coherence terms.
  std::vector<std::vector<std::complex<double>>> cumulative_;
};

/// N i.i.d. phase-randomized samples; deterministic for a given seed.
std::vector<QuadratureSample> sample_quadratures(const Matrix& rho, std::size_t count,
                                                 std::uint64_t seed);

/// Sampler for the joint quadratures of two modes measured with the same LO
/// phase, tabulated on kGridCells2D^2 cells over [-kRange, kRange]^2. rho2 is
/// expressed in the fock::FockBasis(2, n_max) ordering, n_max <= 4.
class JointQuadratureSampler {
 public:
  explicit JointQuadratureSampler(const Matrix& rho2);

  JointQuadratureSample draw(Rng& rng) const;

 private:
  double cdf_at(std::size_t k, double theta) const;

  double cell_width_;
  // Indexed by total-photon-number difference d >= 0.
  std::vector<int> orders_;
  std::vector<std::vector<std::complex<double>>> cumulative_;
};

std::vector<JointQuadratureSample> joint_sample_two_modes(const Matrix& rho2, std::size_t count,
                                                          std::uint64_t seed);

/// A simulated homodyne record, vacuum-normalized so that projecting on any
/// normalized mode returns a quadrature in the units above.
struct QuadratureTrace {
  modes::TimeGrid grid;
  std::vector<double> samples;
  modes::HeraldPair herald;
  double theta = 0.0;
  std::uint64_t seed = 0;
};

/// Builds one trace: white vacuum noise (per-sample std 1/sqrt(2 dt)) whose
/// components along f1 and f2 are replaced by a joint draw from rho2.
/// Throws ModesNotOrthogonal if |<f1,f2>| > 1e-9.
QuadratureTrace synthesize_trace(const JointQuadratureSampler& sampler, const modes::ModeFunction& f1,
                                 const modes::ModeFunction& f2, Rng& rng,
                                 modes::HeraldPair herald = {});

QuadratureTrace synthesize_trace(const Matrix& rho2, const modes::ModeFunction& f1,
                                 const modes::ModeFunction& f2, const modes::TimeGrid& grid,
                                 std::uint64_t seed, modes::HeraldPair herald = {});

/// x = sum_k xi[k] trace[k] dt. Throws GridMismatch.
double project_trace(const QuadratureTrace& trace, const modes::ModeFunction& xi);

/// CSV trace file: "t_start,dt,n_samples,t1,t2,seed,theta" header row, one
/// value row, then one sample per line.
void write_trace_csv(std::ostream& out, const QuadratureTrace& trace);
QuadratureTrace read_trace_csv(std::istream& in);

struct LabeledQuadrature {
  double x = 0.0;
  double theta = 0.0;
  double delta_t_ns = 0.0;
};

/// "x,theta_rad,delta_t_ns" CSV.
void write_quadrature_csv(std::ostream& out, std::span<const LabeledQuadrature> rows);
std::vector<LabeledQuadrature> read_quadrature_csv(std::istream& in);

}  // namespace heraldsim::homodyne
