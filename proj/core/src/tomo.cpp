#include "heraldsim/tomo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "heraldsim/error.hpp"

namespace heraldsim::tomo {

namespace {

// 5-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {0.0, -0.5384693101056831, 0.5384693101056831,
                                            -0.9061798459386640, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {0.5688888888888889, 0.4786286704993665,
                                              0.4786286704993665, 0.2369268850561891,
                                              0.2369268850561891};

// bin_products[b](m, n) = integral over bin b of psi_m psi_n.
std::vector<Eigen::MatrixXd> bin_products(int cutoff, const std::vector<double>& edges) {
  const std::size_t n_bins = edges.size() - 1;
  std::vector<Eigen::MatrixXd> out(n_bins, Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1));
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double mid = 0.5 * (edges[b] + edges[b + 1]);
    const double half = 0.5 * (edges[b + 1] - edges[b]);
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const auto psi = homodyne::fock_wavefunctions(cutoff, mid + half * kGlNodes[q]);
      const Eigen::Map<const Eigen::VectorXd> v(psi.data(), cutoff + 1);
      out[b] += (half * kGlWeights[q]) * (v * v.transpose());
    }
  }
  return out;
}

std::vector<double> make_edges(std::size_t n_bins) {
  std::vector<double> edges(n_bins + 1);
  const double w = 2.0 * homodyne::kRange / static_cast<double>(n_bins);
  for (std::size_t b = 0; b <= n_bins; ++b) edges[b] = -homodyne::kRange + static_cast<double>(b) * w;
  edges[n_bins] = homodyne::kRange;
  return edges;
}

bool has_converged(const std::vector<double>& history, double tol) {
  if (history.size() < 2) return false;
  const double now = history.back();
  const double before = history[history.size() - 2];
  return std::abs(now - before) <= tol * std::max(1.0, std::abs(now));
}

// Observed Fisher information on the simplex (P_0 eliminated).
std::vector<double> fisher_standard_errors(const Eigen::VectorXd& probs, std::span<const double> counts,
                                           const BinnedPovm& povm) {
  const auto dim = probs.size();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] <= 0.0) continue;
    const Eigen::VectorXd col = povm.elements.col(static_cast<Eigen::Index>(b));
    const double p = probs.dot(col);
    if (p <= 0.0) continue;
    info.noalias() += (counts[b] / (p * p)) * col * col.transpose();
  }
  const Eigen::Index free = dim - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, free);
  A.row(0).setConstant(-1.0);
  A.bottomRows(free).setIdentity();
  const Eigen::MatrixXd reduced = A.transpose() * info * A;
  const Eigen::MatrixXd cov_free = reduced.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd cov = A * cov_free * A.transpose();
  std::vector<double> se(static_cast<std::size_t>(dim));
  for (Eigen::Index n = 0; n < dim; ++n) se[static_cast<std::size_t>(n)] = std::sqrt(std::max(0.0, cov(n, n)));
  return se;
}

}  // namespace

std::size_t BinnedPovm::bin_of(double x) const noexcept {
  const std::size_t n = n_bins();
  if (!(x >= edges.front() && x < edges.back())) return n;
  const auto b = static_cast<std::size_t>((x - edges.front()) / bin_width());
  return std::min(b, n - 1);
}

BinnedPovm build_povm(int cutoff, std::size_t n_bins) {
  if (n_bins < 64) throw Error(ErrorCode::InvalidArgument, "POVM needs at least 64 bins");
  if (cutoff < 0 || cutoff > homodyne::kMaxPhotonNumber) {
    throw Error(ErrorCode::InvalidArgument, "POVM cutoff out of range");
  }
  BinnedPovm povm;
  povm.cutoff = cutoff;
  povm.edges = make_edges(n_bins);
  const auto products = bin_products(cutoff, povm.edges);
  povm.elements.resize(cutoff + 1, static_cast<Eigen::Index>(n_bins));
  for (std::size_t b = 0; b < n_bins; ++b) {
    povm.elements.col(static_cast<Eigen::Index>(b)) = products[b].diagonal();
  }
  return povm;
}

void MLConfig::validate() const {
  if (cutoff < 2 || cutoff > homodyne::kMaxPhotonNumber) {
    throw Error(ErrorCode::InvalidArgument, "ML cutoff must be at least 2");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "ML tolerance must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "ML needs at least one iteration");
  if (n_bins < 64) throw Error(ErrorCode::InvalidArgument, "ML needs at least 64 quadrature bins");
  if (n_phase_bins < 1) throw Error(ErrorCode::InvalidArgument, "ML needs at least one phase bin");
}

DiagonalEstimate ml_diagonal_counts(std::span<const double> counts, const BinnedPovm& povm,
                                    const MLConfig& config) {
  config.validate();
  const std::size_t n_bins = povm.n_bins();
  if (counts.size() != n_bins) throw Error(ErrorCode::InvalidArgument, "count vector does not match POVM bins");
  double total = 0.0;
  for (double c : counts) total += c;
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyInput, "no quadrature samples inside the POVM range");

  const Eigen::Index dim = povm.cutoff + 1;
  Eigen::VectorXd probs = Eigen::VectorXd::Constant(dim, 1.0 / static_cast<double>(dim));
  Eigen::VectorXd p_bin(static_cast<Eigen::Index>(n_bins));

  DiagonalEstimate est;
  for (int it = 0; it < config.max_iters; ++it) {
    p_bin = povm.elements.transpose() * probs;
    double loglik = 0.0;
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_bins));
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (counts[b] <= 0.0) continue;
      const double p = p_bin(static_cast<Eigen::Index>(b));
      loglik += counts[b] * std::log(p);
      weights(static_cast<Eigen::Index>(b)) = counts[b] / (total * p);
    }
    est.log_likelihood_history.push_back(loglik);
    est.iterations = it;
    if (has_converged(est.log_likelihood_history, config.tol)) {
      est.converged = true;
      break;
    }
    Eigen::VectorXd next = probs.cwiseProduct(povm.elements * weights);
    next /= next.sum();
    probs = next;
    est.iterations = it + 1;
  }
  if (!est.converged) {
    // Score the final update as well so the reported likelihood matches probs.
    p_bin = povm.elements.transpose() * probs;
    double loglik = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (counts[b] > 0.0) loglik += counts[b] * std::log(p_bin(static_cast<Eigen::Index>(b)));
    }
    est.log_likelihood_history.push_back(loglik);
    est.warnings.push_back("EM reached max_iters without meeting the tolerance");
  }
  est.log_likelihood = est.log_likelihood_history.back();
  est.dist = analytic::PhotonDistribution(std::vector<double>(probs.data(), probs.data() + dim));
  est.standard_errors = fisher_standard_errors(probs, counts, povm);
  est.n_samples = static_cast<std::size_t>(total);
  return est;
}

DiagonalEstimate ml_diagonal(std::span<const double> samples, const MLConfig& config) {
  config.validate();
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no quadrature samples");
  const BinnedPovm povm = build_povm(config.cutoff, config.n_bins);
  std::vector<double> counts(povm.n_bins(), 0.0);
  std::size_t dropped = 0;
  for (double x : samples) {
    const std::size_t b = povm.bin_of(x);
    if (b < counts.size()) {
      counts[b] += 1.0;
    } else {
      ++dropped;
    }
  }
  DiagonalEstimate est = ml_diagonal_counts(counts, povm, config);
  est.n_dropped = dropped;
  if (samples.size() < 1000) {
    est.warnings.push_back("fewer than 1000 samples; reconstruction is not meaningful");
  }
  if (dropped > 0) est.warnings.push_back("samples outside [-8, 8] were ignored");
  return est;
}

DensityEstimate ml_full(std::span<const homodyne::QuadratureSample> samples, const MLConfig& config) {
  config.validate();
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no quadrature samples");
  const int cutoff = config.cutoff;
  const Eigen::Index dim = cutoff + 1;
  const std::vector<double> edges = make_edges(config.n_bins);
  const std::size_t n_x = config.n_bins;
  const std::size_t n_phi = config.n_phase_bins;
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(n_phi);
  const double width = edges[1] - edges[0];

  std::vector<double> counts(n_x * n_phi, 0.0);
  for (const auto& s : samples) {
    if (!(s.x >= edges.front() && s.x < edges.back())) continue;
    const auto bx = std::min(static_cast<std::size_t>((s.x - edges.front()) / width), n_x - 1);
    double th = std::fmod(s.theta, 2.0 * std::numbers::pi);
    if (th < 0.0) th += 2.0 * std::numbers::pi;
    const auto bp = std::min(static_cast<std::size_t>(th / dphi), n_phi - 1);
    counts[bx * n_phi + bp] += 1.0;
  }

  const auto products = bin_products(cutoff, edges);
  struct Cell {
    double count;
    Eigen::MatrixXcd povm;
  };
  std::vector<Cell> cells;
  for (std::size_t bx = 0; bx < n_x; ++bx) {
    for (std::size_t bp = 0; bp < n_phi; ++bp) {
      const double c = counts[bx * n_phi + bp];
      if (c <= 0.0) continue;
      const double center = (static_cast<double>(bp) + 0.5) * dphi;
      Eigen::MatrixXcd pi(dim, dim);
      for (Eigen::Index m = 0; m < dim; ++m) {
        for (Eigen::Index n = 0; n < dim; ++n) {
          const double d = static_cast<double>(m - n);
          // Phase-bin average of e^{i d theta}.
          const double sinc = d == 0.0 ? 1.0 : std::sin(0.5 * d * dphi) / (0.5 * d * dphi);
          pi(m, n) = std::polar(sinc, d * center) * products[bx](m, n);
        }
      }
      cells.push_back({c, std::move(pi)});
    }
  }
  if (cells.empty()) throw Error(ErrorCode::EmptyInput, "no quadrature samples inside the POVM range");

  DensityEstimate est;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
  for (int it = 0; it < config.max_iters; ++it) {
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(dim, dim);
    double loglik = 0.0;
    for (const Cell& cell : cells) {
      const double p = std::max((rho * cell.povm).trace().real(), 1e-300);
      loglik += cell.count * std::log(p);
      R += (cell.count / p) * cell.povm;
    }
    est.log_likelihood_history.push_back(loglik);
    est.iterations = it;
    if (has_converged(est.log_likelihood_history, config.tol)) {
      est.converged = true;
      break;
    }
    Eigen::MatrixXcd next = R * rho * R;
    next = 0.5 * (next + next.adjoint());
    rho = next / next.trace().real();
    est.iterations = it + 1;
  }
  est.rho = rho;
  est.log_likelihood = est.log_likelihood_history.back();
  return est;
}

double fock_fidelity(const analytic::PhotonDistribution& dist, int n) {
  if (n < 0 || static_cast<std::size_t>(n) >= dist.size()) {
    throw Error(ErrorCode::CutoffExceeded, "Fock number beyond the distribution support");
  }
  return dist[static_cast<std::size_t>(n)];
}

void write_estimate_json(std::ostream& out, const DiagonalEstimate& estimate) {
  nlohmann::json j;
  j["cutoff"] = estimate.dist.size() - 1;
  j["probs"] = std::vector<double>(estimate.dist.probs().begin(), estimate.dist.probs().end());
  j["standard_errors"] = estimate.standard_errors;
  j["log_likelihood"] = estimate.log_likelihood;
  j["iterations"] = estimate.iterations;
  j["converged"] = estimate.converged;
  j["n_samples"] = estimate.n_samples;
  j["warnings"] = estimate.warnings;
  out << j.dump(2) << '\n';
}

}  // namespace heraldsim::tomo
