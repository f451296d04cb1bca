#include "heraldsim/modes.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "heraldsim/error.hpp"

namespace heraldsim::modes {

namespace {

void require_same_grid(const ModeFunction& a, const ModeFunction& b) {
  if (!(a.grid() == b.grid())) {
    throw Error(ErrorCode::GridMismatch, "mode functions live on different time grids");
  }
}

double dot(std::span<const double> a, std::span<const double> b, double dt) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s * dt;
}

void axpy(double alpha, std::span<const double> x, std::vector<double>& y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

}  // namespace

TimeGrid::TimeGrid(double t_start, double dt, std::size_t n_samples)
    : t_start_(t_start), dt_(dt), n_samples_(n_samples) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "time grid needs dt > 0");
  }
  if (n_samples < 2) {
    throw Error(ErrorCode::InvalidArgument, "time grid needs at least two samples");
  }
  if (!std::isfinite(t_start)) {
    throw Error(ErrorCode::InvalidArgument, "time grid start must be finite");
  }
}

TimeGrid TimeGrid::from_window(double window, double dt, double t_start) {
  if (!(window > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "window and dt must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(window / dt));
  return TimeGrid(t_start, dt, n);
}

ModeFunction::ModeFunction(TimeGrid grid, std::vector<double> samples, bool normalize)
    : grid_(grid), samples_(std::move(samples)), normalized_(false) {
  if (samples_.size() != grid_.n_samples()) {
    throw Error(ErrorCode::GridMismatch, "sample count does not match the time grid");
  }
  if (normalize) {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
      throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero or non-finite mode");
    }
    const double scale = 1.0 / std::sqrt(n2);
    for (double& s : samples_) s *= scale;
    normalized_ = true;
  } else {
    normalized_ = std::abs(norm_squared() - 1.0) <= 1e-9;
  }
}

double ModeFunction::norm_squared() const noexcept {
  return dot(samples_, samples_, grid_.dt());
}

ModeFunction ModeFunction::normalized() const {
  if (normalized_) return *this;
  return ModeFunction(grid_, samples_, true);
}

ModeFunction make_trigger_mode(double t_i, double gamma, const TimeGrid& grid) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidGamma, "cavity bandwidth gamma must be positive");
  }
  const double rate = std::numbers::pi * gamma;
  const double left = t_i - grid.t_start();
  const double right = grid.t_last() - t_i;
  // Squared mode integrates to exp(-2 rate d) / 2 beyond distance d per side.
  const double lost = 0.5 * (std::exp(-2.0 * rate * left) + std::exp(-2.0 * rate * right));
  if (left < 0.0 || right < 0.0 || !(lost <= kMaxTruncatedMass)) {
    std::ostringstream msg;
    msg << "trigger mode at t=" << t_i << " s loses " << lost
        << " of its L2 mass outside the grid";
    throw Error(ErrorCode::MarginTooSmall, msg.str());
  }

  const double peak = std::sqrt(rate);
  std::vector<double> samples(grid.n_samples());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    samples[k] = peak * std::exp(-rate * std::abs(grid.time(k) - t_i));
  }
  return ModeFunction(grid, std::move(samples), true);
}

double overlap(const ModeFunction& a, const ModeFunction& b) {
  require_same_grid(a, b);
  return dot(a.samples(), b.samples(), a.grid().dt());
}

double overlap_closed_form(double delta_t, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidGamma, "cavity bandwidth gamma must be positive");
  }
  const double x = std::numbers::pi * gamma * std::abs(delta_t);
  return std::exp(-x) * (1.0 + x);
}

SymmetricModes make_symmetric_antisymmetric(const ModeFunction& g1, const ModeFunction& g2) {
  require_same_grid(g1, g2);
  if (!g1.is_normalized() || !g2.is_normalized()) {
    throw Error(ErrorCode::InvalidArgument, "symmetric/antisymmetric modes need normalized inputs");
  }
  const double I = overlap(g1, g2);
  if (I >= 1.0 - kDegenerateEpsilon) {
    throw Error(ErrorCode::DegenerateModes,
                "trigger modes coincide; the antisymmetric mode is undefined");
  }
  const double cs = 1.0 / std::sqrt(2.0 * (1.0 + I));
  const double ca = 1.0 / std::sqrt(2.0 * (1.0 - I));
  std::vector<double> fs(g1.size());
  std::vector<double> fa(g1.size());
  for (std::size_t k = 0; k < fs.size(); ++k) {
    fs[k] = cs * (g1[k] + g2[k]);
    fa[k] = ca * (g1[k] - g2[k]);
  }
  // Discrete renormalization only removes rounding; the prefactors are exact
  // for normalized inputs.
  return {ModeFunction(g1.grid(), std::move(fs), true), ModeFunction(g1.grid(), std::move(fa), true),
          I};
}

std::vector<ModeFunction> extend_orthonormal_basis(std::span<const ModeFunction> seeds,
                                                   const TimeGrid& grid, std::size_t count) {
  if (count < seeds.size()) {
    throw Error(ErrorCode::InvalidArgument, "requested basis is smaller than the seed set");
  }
  if (count > grid.n_samples()) {
    throw Error(ErrorCode::InvalidArgument, "cannot build more orthonormal modes than grid samples");
  }
  for (const auto& s : seeds) {
    if (!(s.grid() == grid)) throw Error(ErrorCode::GridMismatch, "seed mode on a different grid");
  }

  const double dt = grid.dt();
  if (!seeds.empty()) {
    const auto m = static_cast<Eigen::Index>(seeds.size());
    Eigen::MatrixXd gram(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = dot(seeds[i].samples(), seeds[j].samples(), dt) /
                         std::sqrt(seeds[i].norm_squared() * seeds[j].norm_squared());
        gram(i, j) = v;
        gram(j, i) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e8) {
      throw Error(ErrorCode::RankDeficient, "seed modes are numerically linearly dependent");
    }
  }

  std::vector<ModeFunction> basis;
  basis.reserve(count);

  auto orthogonalize = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) axpy(-dot(b.samples(), v, dt), b.samples(), v);
    }
  };

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i == 0) {
      basis.push_back(seeds[0].is_normalized() ? seeds[0] : seeds[0].normalized());
      continue;
    }
    std::vector<double> v(seeds[i].samples().begin(), seeds[i].samples().end());
    orthogonalize(v);
    basis.emplace_back(grid, std::move(v), true);
  }

  const std::size_t n = grid.n_samples();
  const double denom = static_cast<double>(n + 1);
  for (std::size_t j = 0; basis.size() < count && j < n; ++j) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) {
      v[k] = std::sin(std::numbers::pi * static_cast<double>((j + 1) * (k + 1)) / denom);
    }
    const double before = dot(v, v, dt);
    orthogonalize(v);
    if (dot(v, v, dt) < 0.25 * before) continue;
    basis.emplace_back(grid, std::move(v), true);
  }
  if (basis.size() < count) {
    throw Error(ErrorCode::RankDeficient, "could not complete the orthonormal basis");
  }
  return basis;
}

void write_mode_csv(std::ostream& out, const ModeFunction& mode) {
  out << "t_seconds,amplitude\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < mode.size(); ++k) {
    out << mode.grid().time(k) << ',' << mode[k] << '\n';
  }
}

}  // namespace heraldsim::modes
