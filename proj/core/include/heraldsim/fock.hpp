#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/modes.hpp"

namespace heraldsim::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Largest total photon number the engine will host.
inline constexpr int kMaxCutoff = 4;

/// Occupation tuples (n_1, ..., n_M) with n_1 + ... + n_M <= n_max, in
/// lexicographic order: for M = 2, n_max = 2 the order is
/// (0,0) (0,1) (0,2) (1,0) (1,1) (2,0).
class FockBasis {
 public:
  FockBasis(std::size_t n_modes, int n_max);

  std::size_t n_modes() const noexcept { return n_modes_; }
  int n_max() const noexcept { return n_max_; }
  std::size_t size() const noexcept { return tuples_.size(); }
  std::span<const int> occupation(std::size_t index) const noexcept {
    return {tuples_[index].data(), tuples_[index].size()};
  }
  int total(std::size_t index) const noexcept;
  std::optional<std::size_t> index_of(std::span<const int> occupation) const;

 private:
  std::size_t n_modes_;
  int n_max_;
  std::vector<std::vector<int>> tuples_;
};

/// Ordered orthonormal set of temporal modes hosting a multimode state. An
/// abstract register has a size but no waveforms; it appears after basis
/// changes with complex coefficients.
class ModeRegister {
 public:
  static constexpr double kDefaultGramTolerance = 1e-8;

  /// Throws InvalidArgument if the Gram matrix deviates from the identity
  /// by more than `gram_tolerance`, GridMismatch for mixed grids.
  explicit ModeRegister(std::vector<modes::ModeFunction> modes,
                        double gram_tolerance = kDefaultGramTolerance);

  static ModeRegister abstract(std::size_t n_modes);

  std::size_t size() const noexcept { return n_modes_; }
  bool has_waveforms() const noexcept { return !modes_.empty(); }
  const std::vector<modes::ModeFunction>& modes() const noexcept { return modes_; }

  /// <h_m, f> for every register mode. Throws GridMismatch (also for an
  /// abstract register).
  std::vector<double> coefficients(const modes::ModeFunction& f) const;

 private:
  ModeRegister() = default;

  std::vector<modes::ModeFunction> modes_;
  std::size_t n_modes_ = 0;
};

/// Density operator over a FockBasis of a ModeRegister.
class MultimodeState {
 public:
  /// Throws InvalidDensity unless rho is Hermitian (1e-12), has unit trace
  /// (1e-12) and eigenvalues >= -1e-10.
  MultimodeState(ModeRegister reg, int n_max, Matrix rho);

  /// Pure state |psi><psi|; psi must already be normalized.
  static MultimodeState pure(ModeRegister reg, int n_max, const Vector& psi);

  const ModeRegister& mode_register() const noexcept { return register_; }
  const FockBasis& basis() const noexcept { return basis_; }
  const Matrix& rho() const noexcept { return rho_; }
  int n_max() const noexcept { return basis_.n_max(); }

  double trace() const noexcept { return rho_.trace().real(); }
  double purity() const;
  /// Distribution of the total photon number over all register modes.
  std::vector<double> total_photon_distribution() const;

 private:
  ModeRegister register_;
  FockBasis basis_;
  Matrix rho_;
};

/// alpha_m = <h_m, g1>, beta_n = <h_n, g2>, C = alpha beta^T.
struct DecompositionCoeffs {
  std::vector<double> alpha;
  std::vector<double> beta;
  Eigen::MatrixXd C;
};

DecompositionCoeffs decomposition_coeffs(const modes::ModeFunction& g1,
                                         const modes::ModeFunction& g2,
                                         const ModeRegister& reg);

/// Applies sum_m c_m a_m^dagger to a state vector. Components pushed above
/// the cutoff are dropped, so callers keep n_max large enough.
Vector apply_creation(const FockBasis& basis, const Vector& psi, std::span<const Complex> coeffs);

/// Norm of a^dagger[g1] a^dagger[g2] |0> projected on the register, i.e.
/// sqrt(1 + I^2) when the register spans both trigger modes.
double heralded_state_norm(const modes::ModeFunction& g1, const modes::ModeFunction& g2,
                           const ModeRegister& reg);

/// Residual L2 mass of a trigger mode outside the register above which the
/// heralded state cannot be represented.
inline constexpr double kMaxSpanDeficit = 1e-6;

/// Normalized heralded two-photon state a^dagger[g1] a^dagger[g2] |0> over
/// the register. Throws SpanDeficit when the register misses part of g1 or
/// g2, InvalidArgument for n_max outside [2, kMaxCutoff].
MultimodeState build_heralded_state(const modes::ModeFunction& g1, const modes::ModeFunction& g2,
                                    const ModeRegister& reg, int n_max = 2);

/// Same pure-loss channel of transmittance eta on every register mode,
/// via photon-number Kraus operators.
MultimodeState apply_loss_channel(const MultimodeState& state, double eta);

/// Passive basis change with new creation operators A_m^dagger =
/// sum_k U(m,k) a_k^dagger. The register waveforms follow when U is real;
/// otherwise the output register is abstract. Throws NotUnitary when
/// ||U U^dagger - 1|| > 1e-10.
MultimodeState change_mode_basis(const MultimodeState& state, const Matrix& unitary);

/// Reduced density matrix (dimension n_max + 1) of the temporal mode xi. The
/// part of xi orthogonal to the register sees vacuum.
Matrix reduce_to_mode(const MultimodeState& state, const modes::ModeFunction& xi);

/// Partial trace keeping register mode `mode`.
Matrix reduce_to_register_mode(const MultimodeState& state, std::size_t mode);

/// Diagonal of a single-mode density matrix.
analytic::PhotonDistribution photon_distribution(const Matrix& rho);

/// {"dimension": d, "real": [...], "imag": [...]} with row-major entries.
void write_density_json(std::ostream& out, const Matrix& rho);
Matrix read_density_json(std::istream& in);

}  // namespace heraldsim::fock
