#include "heraldsim/clicks.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>

#include "heraldsim/error.hpp"
#include "heraldsim/random.hpp"

namespace heraldsim::clicks {

namespace {

constexpr double kMaxRateTimesDt = 0.1;

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_smooth(std::size_t n) {
  for (std::size_t p : {2, 3, 5, 7}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

std::size_t next_smooth(std::size_t n) {
  while (!is_smooth(n)) ++n;
  return n;
}

void inverse_fft_in_place(std::vector<std::complex<double>>& data) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

double FieldTrace::mean_intensity() const noexcept {
  double s = 0.0;
  for (const auto& a : amplitude) s += std::norm(a);
  return s / static_cast<double>(amplitude.size());
}

double FieldTrace::autocorrelation(std::size_t lag) const {
  const std::size_t n = amplitude.size();
  if (lag >= n) throw Error(ErrorCode::InvalidArgument, "autocorrelation lag exceeds the record");
  std::complex<double> s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::conj(amplitude[j]) * amplitude[(j + lag) % n];
  return std::abs(s) / (static_cast<double>(n) * mean_intensity());
}

FieldTrace synthesize_thermal_field(double gamma, double duration, double dt_field,
                                    std::uint64_t seed) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidGamma, "gamma must be positive");
  if (!(dt_field > 0.0) || dt_field > 1.0 / (20.0 * gamma)) {
    throw Error(ErrorCode::ResolutionTooCoarse, "field sampling must satisfy dt <= 1/(20 gamma)");
  }
  if (!(duration >= 100.0 / gamma)) {
    throw Error(ErrorCode::DurationTooShort, "field record must last at least 100/gamma");
  }

  const auto requested = static_cast<std::size_t>(std::ceil(duration / dt_field - 1e-9));
  const std::size_t n = next_smooth(std::max<std::size_t>(requested, 2));
  const double a = std::numbers::pi * gamma;
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt_field);

  std::vector<double> filter(n);
  double power = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double idx = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    const double w = idx * dw;
    filter[k] = 1.0 / (w * w + a * a);
    power += filter[k] * filter[k];
  }
  // The unnormalized inverse FFT gives E|a_j|^2 = scale^2 sum_k H_k^2 for E|Z_k|^2 = 1.
  const double scale = 1.0 / std::sqrt(power);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
  std::vector<std::complex<double>> field(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    field[k] = scale * filter[k] * std::complex<double>(re, im);
  }
  inverse_fft_in_place(field);

  return FieldTrace{modes::TimeGrid(0.0, dt_field, n), std::move(field), gamma};
}

ClickStream sample_clicks(const FieldTrace& field, double mean_rate, std::uint64_t seed) {
  const double dt = field.grid.dt();
  if (!(mean_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "mean rate must be positive");
  if (mean_rate * dt > kMaxRateTimesDt) {
    throw Error(ErrorCode::RateTooHigh, "thinning needs mean_rate * dt_field <= 0.1");
  }
  const std::size_t n = field.amplitude.size();
  std::vector<double> intensity(n);
  double peak = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    intensity[j] = std::norm(field.amplitude[j]);
    peak = std::max(peak, intensity[j]);
  }

  ClickStream out;
  out.duration = field.duration();
  out.mean_rate = mean_rate;
  if (peak <= 0.0) return out;

  Rng rng(seed);
  std::exponential_distribution<double> gap(mean_rate * peak);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double t = 0.0;
  while (true) {
    t += gap(rng);
    if (t >= out.duration) break;
    const double pos = t / dt;
    const auto j = std::min(static_cast<std::size_t>(pos), n - 1);
    const double frac = pos - static_cast<double>(j);
    const double level = (1.0 - frac) * intensity[j] + frac * intensity[(j + 1) % n];
    if (uniform(rng) * peak < level) {
      if (out.times.empty() || t > out.times.back()) out.times.push_back(t);
    }
  }
  return out;
}

ClickStream sample_poisson_clicks(double mean_rate, double duration, std::uint64_t seed) {
  if (!(mean_rate > 0.0) || !(duration > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rate and duration must be positive");
  }
  ClickStream out;
  out.duration = duration;
  out.mean_rate = mean_rate;
  Rng rng(seed);
  std::exponential_distribution<double> gap(mean_rate);
  for (double t = gap(rng); t < duration; t += gap(rng)) {
    if (out.times.empty() || t > out.times.back()) out.times.push_back(t);
  }
  return out;
}

ClickStream simulate_thermal_clicks(double gamma, double mean_rate, double dt_field,
                                    double segment_duration, std::size_t min_events,
                                    std::uint64_t seed) {
  ClickStream out;
  out.mean_rate = mean_rate;
  double offset = 0.0;
  for (std::uint64_t segment = 0; out.times.size() < min_events; ++segment) {
    const FieldTrace field =
        synthesize_thermal_field(gamma, segment_duration, dt_field, derive_seed(seed, 2 * segment));
    const ClickStream part = sample_clicks(field, mean_rate, derive_seed(seed, 2 * segment + 1));
    for (double t : part.times) out.times.push_back(offset + t);
    offset += part.duration;
    if (segment > 1'000'000) throw Error(ErrorCode::InsufficientStatistics, "click simulation does not produce events");
  }
  out.duration = offset;
  if (out.times.size() > min_events) {
    out.times.resize(min_events);
    out.duration = out.times.back();
  }
  return out;
}

G2Histogram g2_histogram(const ClickStream& stream, double bin_width, double max_delay,
                         std::optional<double> gamma) {
  if (!(bin_width > 0.0) || !(max_delay > bin_width)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < bin_width < max_delay");
  }
  if (gamma && max_delay < 5.0 / (std::numbers::pi * *gamma)) {
    throw Error(ErrorCode::InvalidArgument, "max_delay must reach 5/(pi gamma) for a flat plateau");
  }
  G2Histogram h;
  h.bin_width = bin_width;
  const auto n_bins = static_cast<std::size_t>(std::llround(max_delay / bin_width));
  h.max_delay = static_cast<double>(n_bins) * bin_width;
  h.counts.assign(n_bins, 0.0);

  const auto& t = stream.times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const double d = t[j] - t[i];
      if (d >= h.max_delay) break;
      const auto b = static_cast<std::size_t>(d / bin_width);
      if (b < n_bins) h.counts[b] += 1.0;
    }
  }

  const auto first_plateau = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(n_bins) - 1e-9));
  double plateau_total = 0.0;
  std::size_t plateau_bins = 0;
  for (std::size_t k = first_plateau; k < n_bins; ++k) {
    plateau_total += h.counts[k];
    ++plateau_bins;
  }
  h.plateau = plateau_bins ? plateau_total / static_cast<double>(plateau_bins) : 0.0;
  h.plateau_relative_error = plateau_total > 0.0 ? 1.0 / std::sqrt(plateau_total)
                                                 : std::numeric_limits<double>::infinity();
  if (!(h.plateau_relative_error < 0.02)) {
    throw Error(ErrorCode::InsufficientStatistics, "too few pairs on the far-delay plateau");
  }
  h.g2.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) h.g2[k] = h.counts[k] / h.plateau;
  return h;
}

std::vector<CoincidencePair> select_coincidences(const ClickStream& stream, double window,
                                                 double dead_time, std::uint64_t seed) {
  if (!(window > 0.0)) throw Error(ErrorCode::InvalidArgument, "coincidence window must be positive");
  const auto& t = stream.times;
  const std::size_t n = t.size();
  std::vector<CoincidencePair> pairs;
  if (n == 0) return pairs;

  Rng rng(seed);
  std::bernoulli_distribution to_a(0.5);
  std::vector<char> is_a(n);
  for (std::size_t i = 0; i < n; ++i) is_a[i] = to_a(rng) ? 1 : 0;

  std::vector<char> consumed(n, 0);
  double next_allowed = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_a[i] || t[i] < next_allowed) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (t[j] - t[i] > window) break;
      if (is_a[j] || consumed[j]) continue;
      consumed[i] = consumed[j] = 1;
      pairs.push_back({t[i], t[j], t[j] - t[i]});
      next_allowed = t[i] + dead_time;
      break;
    }
  }
  return pairs;
}

void write_clicks_csv(std::ostream& out, const ClickStream& stream) {
  out << "time_seconds\n" << std::setprecision(17);
  for (double t : stream.times) out << t << '\n';
}

void write_g2_csv(std::ostream& out, const G2Histogram& hist) {
  out << "delay_ns,g2\n" << std::setprecision(17);
  for (std::size_t k = 0; k < hist.g2.size(); ++k) out << hist.bin_center(k) * 1e9 << ',' << hist.g2[k] << '\n';
}

}  // namespace heraldsim::clicks
