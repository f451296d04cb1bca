#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace heraldsim::modes {

/// Uniform sampling grid t_k = t_start + k * dt, k = 0 .. n_samples-1.
/// Defaults mirror a 10 GS/s digitizer recording 500 ns.
class TimeGrid {
 public:
  static constexpr double kDefaultDt = 0.1e-9;
  static constexpr double kDefaultWindow = 500e-9;

  TimeGrid(double t_start, double dt, std::size_t n_samples);

  /// Grid of `window` seconds (rounded to a whole number of samples).
  static TimeGrid from_window(double window = kDefaultWindow, double dt = kDefaultDt,
                              double t_start = 0.0);

  double t_start() const noexcept { return t_start_; }
  double dt() const noexcept { return dt_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  double time(std::size_t k) const noexcept { return t_start_ + static_cast<double>(k) * dt_; }
  double t_last() const noexcept { return time(n_samples_ - 1); }
  double span() const noexcept { return static_cast<double>(n_samples_) * dt_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t_start_;
  double dt_;
  std::size_t n_samples_;
};

/// A real temporal mode function sampled on a TimeGrid, in units of s^(-1/2).
/// Instances are immutable.
class ModeFunction {
 public:
  /// Wraps raw samples. With `normalize` set the samples are rescaled so
  /// that sum(samples^2) * dt == 1.
  ModeFunction(TimeGrid grid, std::vector<double> samples, bool normalize);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t k) const noexcept { return samples_[k]; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool is_normalized() const noexcept { return normalized_; }

  double norm_squared() const noexcept;
  ModeFunction normalized() const;

 private:
  TimeGrid grid_;
  std::vector<double> samples_;
  bool normalized_;
};

/// Herald detection times. Delay may be negative; formulas use |delay|.
struct HeraldPair {
  double t1 = 0.0;
  double t2 = 0.0;

  double delay() const noexcept { return t2 - t1; }
};

/// Tail-truncation bound for make_trigger_mode: the L2 mass of the ideal
/// mode falling outside the grid must stay below this.
inline constexpr double kMaxTruncatedMass = 1e-6;

/// Overlaps at or above 1 - kDegenerateEpsilon make the antisymmetric mode
/// numerically meaningless.
inline constexpr double kDegenerateEpsilon = 1e-6;

/// Double-sided exponential sqrt(pi*gamma) exp(-pi*gamma |t - t_i|) sampled on
/// `grid` and renormalized to unit discrete norm. `gamma` is the cavity FWHM
/// in Hz.
///
/// Throws InvalidGamma for gamma <= 0 and MarginTooSmall when the analytic
/// mass lost outside the grid exceeds kMaxTruncatedMass.
ModeFunction make_trigger_mode(double t_i, double gamma, const TimeGrid& grid);

/// Discrete inner product sum a[k] b[k] dt. Throws GridMismatch.
double overlap(const ModeFunction& a, const ModeFunction& b);

/// exp(-pi gamma |dt|) (1 + pi gamma |dt|), the overlap of two trigger modes
/// separated by `delta_t`.
double overlap_closed_form(double delta_t, double gamma);

struct SymmetricModes {
  ModeFunction symmetric;      // (g1 + g2) / sqrt(2 (1 + I))
  ModeFunction antisymmetric;  // (g1 - g2) / sqrt(2 (1 - I))
  double overlap;              // I = <g1, g2>
};

/// Throws DegenerateModes when <g1,g2> >= 1 - kDegenerateEpsilon,
/// GridMismatch, or InvalidArgument for unnormalized inputs.
SymmetricModes make_symmetric_antisymmetric(const ModeFunction& g1, const ModeFunction& g2);

/// Orthonormal family of `count` modes whose first seeds.size() members span
/// the seeds (modified Gram-Schmidt, two passes). The first output is the
/// first seed itself when that seed is already normalized.
///
/// Remaining slots are filled from the discrete sine basis
/// sin(pi (j+1) (k+1) / (n+1)), j = 0, 1, ..., skipping candidates that are
/// nearly inside the current span. Any orthonormal completion is acceptable
/// downstream: reduced photon statistics depend only on the span of the
/// trigger modes.
///
/// Throws RankDeficient if the seed Gram matrix has condition number above
/// 1e8, GridMismatch, or InvalidArgument if count < seeds.size().
std::vector<ModeFunction> extend_orthonormal_basis(std::span<const ModeFunction> seeds,
                                                   const TimeGrid& grid, std::size_t count);

/// Writes "t_seconds,amplitude" CSV rows for one mode.
void write_mode_csv(std::ostream& out, const ModeFunction& mode);

}  // namespace heraldsim::modes
