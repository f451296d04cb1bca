#include "heraldsim/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "heraldsim/error.hpp"
#include "heraldsim/fock.hpp"

namespace heraldsim::homodyne {

namespace {

using Complex = std::complex<double>;

constexpr double kDensityTolerance = 1e-8;
constexpr double kOrthogonalityTolerance = 1e-9;

int two_mode_cutoff(Eigen::Index dim) {
  for (int n = 0; n <= fock::kMaxCutoff; ++n) {
    if ((n + 1) * (n + 2) / 2 == dim) return n;
  }
  throw Error(ErrorCode::InvalidDensity, "two-mode density matrix has an unsupported dimension");
}

// Smallest k in [1, size) with cdf(k) > target, for a non-decreasing cdf.
template <typename Cdf>
std::size_t search_cell(std::size_t size, double target, const Cdf& cdf) {
  std::size_t lo = 1;
  std::size_t hi = size - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (cdf(mid) > target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoError, "cannot parse number '" + s + "'");
  }
}

}  // namespace

std::vector<double> fock_wavefunctions(int n_max, double x) {
  if (n_max < 0 || n_max > kMaxPhotonNumber) {
    throw Error(ErrorCode::CutoffExceeded, "Fock wavefunction order out of range");
  }
  std::vector<double> psi(static_cast<std::size_t>(n_max) + 1);
  psi[0] = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(std::numbers::pi));
  if (n_max >= 1) psi[1] = std::numbers::sqrt2 * x * psi[0];
  for (int n = 1; n < n_max; ++n) {
    const double dn = static_cast<double>(n);
    psi[n + 1] = std::sqrt(2.0 / (dn + 1.0)) * x * psi[n] - std::sqrt(dn / (dn + 1.0)) * psi[n - 1];
  }
  return psi;
}

double fock_quadrature_pdf(int n, double x) {
  const double psi = fock_wavefunctions(n, x).back();
  return psi * psi;
}

double mixture_pdf(const analytic::PhotonDistribution& dist, double x) {
  const auto psi = fock_wavefunctions(static_cast<int>(dist.size()) - 1, x);
  double p = 0.0;
  for (std::size_t n = 0; n < dist.size(); ++n) p += dist[n] * psi[n] * psi[n];
  return p;
}

double quadrature_pdf(const Matrix& rho, double x, double theta) {
  const auto psi = fock_wavefunctions(static_cast<int>(rho.rows()) - 1, x);
  double p = 0.0;
  for (Eigen::Index m = 0; m < rho.rows(); ++m) {
    for (Eigen::Index n = 0; n < rho.cols(); ++n) {
      const Complex phase = std::polar(1.0, -static_cast<double>(m - n) * theta);
      p += (rho(m, n) * phase).real() * psi[m] * psi[n];
    }
  }
  return p;
}

void validate_density(const Matrix& rho) {
  if (rho.rows() == 0 || rho.rows() != rho.cols()) {
    throw Error(ErrorCode::InvalidDensity, "density matrix must be square and non-empty");
  }
  if (!rho.allFinite()) throw Error(ErrorCode::InvalidDensity, "density matrix has non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kDensityTolerance) {
    throw Error(ErrorCode::InvalidDensity, "density matrix is not Hermitian");
  }
  if (std::abs(rho.trace().real() - 1.0) > kDensityTolerance) {
    throw Error(ErrorCode::InvalidDensity, "density matrix trace differs from one");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rho, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kDensityTolerance) {
    throw Error(ErrorCode::InvalidDensity, "density matrix is not positive semidefinite");
  }
}

// ------------------------------------------------------- QuadratureSampler

QuadratureSampler::QuadratureSampler(const Matrix& rho) {
  validate_density(rho);
  const int n_max = static_cast<int>(rho.rows()) - 1;
  if (n_max > kMaxPhotonNumber) throw Error(ErrorCode::CutoffExceeded, "state cutoff too large");

  const std::size_t G = kGridPoints1D;
  const double h = 2.0 * kRange / static_cast<double>(G - 1);
  x_.resize(G);
  std::vector<std::vector<double>> psi(G);
  for (std::size_t k = 0; k < G; ++k) {
    x_[k] = -kRange + static_cast<double>(k) * h;
    psi[k] = fock_wavefunctions(n_max, x_[k]);
  }

  cumulative_.assign(static_cast<std::size_t>(n_max) + 1, {});
  for (int d = 0; d <= n_max; ++d) {
    double largest = 0.0;
    for (int n = 0; n + d <= n_max; ++n) largest = std::max(largest, std::abs(rho(n + d, n)));
    if (d > 0 && largest < 1e-15) continue;

    std::vector<Complex> density(G);
    for (std::size_t k = 0; k < G; ++k) {
      Complex s = 0.0;
      for (int n = 0; n + d <= n_max; ++n) s += rho(n + d, n) * psi[k][n + d] * psi[k][n];
      density[k] = d == 0 ? s : 2.0 * s;
    }
    auto& cum = cumulative_[static_cast<std::size_t>(d)];
    cum.assign(G, Complex(0.0));
    for (std::size_t k = 1; k < G; ++k) cum[k] = cum[k - 1] + 0.5 * h * (density[k - 1] + density[k]);
  }
}

double QuadratureSampler::cdf_at(std::size_t k, double theta) const {
  double c = cumulative_[0][k].real();
  for (std::size_t d = 1; d < cumulative_.size(); ++d) {
    if (cumulative_[d].empty()) continue;
    c += (std::polar(1.0, -static_cast<double>(d) * theta) * cumulative_[d][k]).real();
  }
  return c;
}

double QuadratureSampler::draw_at(double theta, Rng& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t G = x_.size();
  const double target = uniform(rng) * cdf_at(G - 1, theta);
  const std::size_t k = search_cell(G, target, [&](std::size_t i) { return cdf_at(i, theta); });
  const double lo = cdf_at(k - 1, theta);
  const double hi = cdf_at(k, theta);
  const double frac = hi > lo ? std::clamp((target - lo) / (hi - lo), 0.0, 1.0) : 0.5;
  return x_[k - 1] + frac * (x_[k] - x_[k - 1]);
}

QuadratureSample QuadratureSampler::draw(Rng& rng) const {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double theta = phase(rng);
  return {draw_at(theta, rng), theta};
}

std::vector<QuadratureSample> sample_quadratures(const Matrix& rho, std::size_t count,
                                                 std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  const QuadratureSampler sampler(rho);
  Rng rng(seed);
  std::vector<QuadratureSample> out(count);
  for (auto& s : out) s = sampler.draw(rng);
  return out;
}

// --------------------------------------------------- JointQuadratureSampler

JointQuadratureSampler::JointQuadratureSampler(const Matrix& rho2)
    : cell_width_(2.0 * kRange / static_cast<double>(kGridCells2D)) {
  validate_density(rho2);
  const int n_max = two_mode_cutoff(rho2.rows());
  const fock::FockBasis basis(2, n_max);
  const std::size_t C = kGridCells2D;
  const double w = cell_width_;

  std::vector<std::vector<double>> psi(C);
  for (std::size_t i = 0; i < C; ++i) {
    psi[i] = fock_wavefunctions(n_max, -kRange + (static_cast<double>(i) + 0.5) * w);
  }

  struct Term {
    int a1, a2, b1, b2;
    Complex weight;
  };
  std::vector<std::vector<Term>> by_order(static_cast<std::size_t>(n_max) + 1);
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) {
      const int d = basis.total(r) - basis.total(c);
      if (d < 0) continue;
      const Complex v = rho2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (std::abs(v) < 1e-15) continue;
      const auto orow = basis.occupation(r);
      const auto ocol = basis.occupation(c);
      by_order[static_cast<std::size_t>(d)].push_back({orow[0], orow[1], ocol[0], ocol[1], d == 0 ? v : 2.0 * v});
    }
  }

  const double area = w * w;
  for (std::size_t d = 0; d < by_order.size(); ++d) {
    if (by_order[d].empty()) continue;
    orders_.push_back(static_cast<int>(d));
    std::vector<Complex> cum(C * C);
    Complex running = 0.0;
    for (std::size_t i = 0; i < C; ++i) {
      for (std::size_t j = 0; j < C; ++j) {
        Complex s = 0.0;
        for (const Term& t : by_order[d]) {
          s += t.weight * (psi[i][t.a1] * psi[j][t.a2] * psi[i][t.b1] * psi[j][t.b2]);
        }
        running += s * area;
        cum[i * C + j] = running;
      }
    }
    cumulative_.push_back(std::move(cum));
  }
  if (orders_.empty() || orders_.front() != 0) {
    throw Error(ErrorCode::InvalidDensity, "two-mode state has no population");
  }
}

double JointQuadratureSampler::cdf_at(std::size_t k, double theta) const {
  double c = 0.0;
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    c += (std::polar(1.0, -static_cast<double>(orders_[i]) * theta) * cumulative_[i][k]).real();
  }
  return c;
}

JointQuadratureSample JointQuadratureSampler::draw(Rng& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double theta = 2.0 * std::numbers::pi * uniform(rng);
  const std::size_t N = kGridCells2D * kGridCells2D;
  const double target = uniform(rng) * cdf_at(N - 1, theta);
  // Cell 0 is selected when target falls below its own cumulative mass.
  const std::size_t k = cdf_at(0, theta) > target
                            ? 0
                            : search_cell(N, target, [&](std::size_t i) { return cdf_at(i, theta); });
  const std::size_t i = k / kGridCells2D;
  const std::size_t j = k % kGridCells2D;
  const double x1 = -kRange + (static_cast<double>(i) + uniform(rng)) * cell_width_;
  const double x2 = -kRange + (static_cast<double>(j) + uniform(rng)) * cell_width_;
  return {x1, x2, theta};
}

std::vector<JointQuadratureSample> joint_sample_two_modes(const Matrix& rho2, std::size_t count,
                                                          std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  const JointQuadratureSampler sampler(rho2);
  Rng rng(seed);
  std::vector<JointQuadratureSample> out(count);
  for (auto& s : out) s = sampler.draw(rng);
  return out;
}

// ---------------------------------------------------------------- traces

QuadratureTrace synthesize_trace(const JointQuadratureSampler& sampler, const modes::ModeFunction& f1,
                                 const modes::ModeFunction& f2, Rng& rng, modes::HeraldPair herald) {
  if (std::abs(modes::overlap(f1, f2)) > kOrthogonalityTolerance) {
    throw Error(ErrorCode::ModesNotOrthogonal, "trace modes f1 and f2 are not orthogonal");
  }
  const auto& grid = f1.grid();
  const double dt = grid.dt();
  const JointQuadratureSample q = sampler.draw(rng);

  std::normal_distribution<double> white(0.0, 1.0 / std::sqrt(2.0 * dt));
  std::vector<double> w(grid.n_samples());
  for (double& v : w) v = white(rng);

  double p1 = 0.0;
  double p2 = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    p1 += f1[k] * w[k];
    p2 += f2[k] * w[k];
  }
  p1 *= dt;
  p2 *= dt;
  const double c1 = q.x_f1 - p1;
  const double c2 = q.x_f2 - p2;
  for (std::size_t k = 0; k < w.size(); ++k) w[k] += c1 * f1[k] + c2 * f2[k];

  return QuadratureTrace{grid, std::move(w), herald, q.theta, 0};
}

QuadratureTrace synthesize_trace(const Matrix& rho2, const modes::ModeFunction& f1,
                                 const modes::ModeFunction& f2, const modes::TimeGrid& grid,
                                 std::uint64_t seed, modes::HeraldPair herald) {
  if (!(f1.grid() == grid) || !(f2.grid() == grid)) {
    throw Error(ErrorCode::GridMismatch, "trace modes do not live on the requested grid");
  }
  if (std::abs(modes::overlap(f1, f2)) > kOrthogonalityTolerance) {
    throw Error(ErrorCode::ModesNotOrthogonal, "trace modes f1 and f2 are not orthogonal");
  }
  const JointQuadratureSampler sampler(rho2);
  Rng rng(seed);
  QuadratureTrace t = synthesize_trace(sampler, f1, f2, rng, herald);
  t.seed = seed;
  return t;
}

double project_trace(const QuadratureTrace& trace, const modes::ModeFunction& xi) {
  if (!(trace.grid == xi.grid()) || trace.samples.size() != xi.size()) {
    throw Error(ErrorCode::GridMismatch, "projection mode and trace use different grids");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < trace.samples.size(); ++k) s += xi[k] * trace.samples[k];
  return s * trace.grid.dt();
}

// -------------------------------------------------------------------- IO

void write_trace_csv(std::ostream& out, const QuadratureTrace& trace) {
  out << "t_start,dt,n_samples,t1,t2,seed,theta\n";
  out << std::setprecision(17) << trace.grid.t_start() << ',' << trace.grid.dt() << ','
      << trace.grid.n_samples() << ',' << trace.herald.t1 << ',' << trace.herald.t2 << ','
      << trace.seed << ',' << trace.theta << '\n';
  out << "sample\n";
  for (double v : trace.samples) out << v << '\n';
}

QuadratureTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t_start", 0) != 0) {
    throw Error(ErrorCode::IoError, "trace CSV is missing its header");
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "trace CSV is missing header values");
  const auto cells = split_csv(line);
  if (cells.size() < 6) throw Error(ErrorCode::IoError, "trace CSV header values are incomplete");
  const modes::TimeGrid grid(parse_double(cells[0]), parse_double(cells[1]),
                             static_cast<std::size_t>(std::stoull(cells[2])));
  QuadratureTrace t{grid, {}, {parse_double(cells[3]), parse_double(cells[4])},
                    cells.size() > 6 ? parse_double(cells[6]) : 0.0, std::stoull(cells[5])};
  std::getline(in, line);  // "sample"
  t.samples.reserve(grid.n_samples());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.samples.push_back(parse_double(line));
  }
  if (t.samples.size() != grid.n_samples()) {
    throw Error(ErrorCode::IoError, "trace CSV sample count does not match its header");
  }
  return t;
}

void write_quadrature_csv(std::ostream& out, std::span<const LabeledQuadrature> rows) {
  out << "x,theta_rad,delta_t_ns\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.x << ',' << r.theta << ',' << r.delta_t_ns << '\n';
}

std::vector<LabeledQuadrature> read_quadrature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "quadrature CSV is empty");
  std::vector<LabeledQuadrature> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.empty() || cells.size() > 3) {
      throw Error(ErrorCode::IoError, "bad quadrature CSV row " + std::to_string(line_no));
    }
    LabeledQuadrature q;
    q.x = parse_double(cells[0]);
    if (cells.size() > 1) q.theta = parse_double(cells[1]);
    if (cells.size() > 2) q.delta_t_ns = parse_double(cells[2]);
    rows.push_back(q);
  }
  return rows;
}

}  // namespace heraldsim::homodyne
