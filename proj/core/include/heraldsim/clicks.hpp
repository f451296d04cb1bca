#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "heraldsim/modes.hpp"

namespace heraldsim::clicks {

/// Stationary circular complex Gaussian field of unit mean intensity whose
/// normalized autocorrelation is (1 + pi gamma |tau|) exp(-pi gamma |tau|).
/// The record is periodic (it comes out of an inverse FFT).
struct FieldTrace {
  modes::TimeGrid grid;
  std::vector<std::complex<double>> amplitude;
  double gamma = 0.0;

  double duration() const noexcept { return grid.span(); }
  double mean_intensity() const noexcept;
  /// |<a*(t) a(t+tau)>| / <|a|^2> at an integer lag (circular estimate).
  double autocorrelation(std::size_t lag) const;
};

/// Colors complex white noise with the amplitude filter 1/(w^2 + (pi gamma)^2)
/// in the frequency domain. The sample count is rounded up to an FFT-friendly
/// size, so the returned duration can slightly exceed the request.
///
/// Throws ResolutionTooCoarse if dt_field > 1/(20 gamma), DurationTooShort if
/// duration < 100/gamma, InvalidGamma for gamma <= 0.
FieldTrace synthesize_thermal_field(double gamma, double duration, double dt_field,
                                    std::uint64_t seed);

struct ClickStream {
  std::vector<double> times;  // strictly increasing, within [0, duration]
  double duration = 0.0;
  double mean_rate = 0.0;
};

/// Cox process with intensity mean_rate |a(t)|^2 (linear interpolation of the
/// sampled intensity), generated by thinning a homogeneous process at
/// mean_rate * max |a|^2. Throws RateTooHigh if mean_rate * dt_field > 0.1.
ClickStream sample_clicks(const FieldTrace& field, double mean_rate, std::uint64_t seed);

/// Homogeneous Poisson stream (constant unit-intensity field).
ClickStream sample_poisson_clicks(double mean_rate, double duration, std::uint64_t seed);

/// Field synthesis and click sampling in independent seeded segments of
/// `segment_duration`, concatenated until at least `min_events` clicks exist
/// (then truncated to exactly min_events). Pairs straddling a boundary see
/// uncorrelated fields; the bias is of order window / segment_duration.
ClickStream simulate_thermal_clicks(double gamma, double mean_rate, double dt_field,
                                    double segment_duration, std::size_t min_events,
                                    std::uint64_t seed);

struct G2Histogram {
  double bin_width = 0.0;
  double max_delay = 0.0;
  std::vector<double> counts;        // pair counts per delay bin [k w, (k+1) w)
  std::vector<double> g2;            // counts / plateau
  double plateau = 0.0;              // mean count over [0.8 max_delay, max_delay)
  double plateau_relative_error = 0.0;

  double bin_center(std::size_t k) const noexcept { return (static_cast<double>(k) + 0.5) * bin_width; }
};

/// Histogram of positive pairwise delays up to max_delay normalized by its
/// far-delay plateau. With `gamma` given, max_delay must be at least
/// 5/(pi gamma). Throws InsufficientStatistics when the plateau's relative
/// Poisson error reaches 2%.
G2Histogram g2_histogram(const ClickStream& stream, double bin_width, double max_delay,
                         std::optional<double> gamma = std::nullopt);

struct CoincidencePair {
  double t1 = 0.0;
  double t2 = 0.0;
  double delta_t = 0.0;
};

inline constexpr double kDefaultDeadTime = 500e-9;

/// Dual A-B trigger: every click goes to detector A or B with probability
/// 1/2; an A click is paired with the next B click when that B falls within
/// `window`. Clicks are never reused and a new pair may only start
/// `dead_time` after the previous pair's first click.
std::vector<CoincidencePair> select_coincidences(const ClickStream& stream, double window,
                                                 double dead_time, std::uint64_t seed);

void write_clicks_csv(std::ostream& out, const ClickStream& stream);
/// "delay_ns,g2" rows at bin centers.
void write_g2_csv(std::ostream& out, const G2Histogram& hist);

}  // namespace heraldsim::clicks
