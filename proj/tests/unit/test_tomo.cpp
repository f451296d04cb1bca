#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "heraldsim/error.hpp"
#include "heraldsim/homodyne.hpp"
#include "heraldsim/tomo.hpp"

namespace hs = heraldsim;
namespace tomo = heraldsim::tomo;
namespace hd = heraldsim::homodyne;

namespace {

hd::Matrix diagonal(std::vector<double> p) {
  hd::Matrix rho = hd::Matrix::Zero(p.size(), p.size());
  for (std::size_t n = 0; n < p.size(); ++n) rho(n, n) = p[n];
  return rho;
}

std::vector<double> xs_from(const hd::Matrix& rho, std::size_t n, std::uint64_t seed) {
  std::vector<double> xs;
  for (const auto& s : hd::sample_quadratures(rho, n, seed)) xs.push_back(s.x);
  return xs;
}

template <typename F>
hs::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const hs::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no heraldsim::Error thrown";
  return hs::ErrorCode::IoError;
}

}  // namespace

TEST(Povm, RowsIntegrateToOne) {
  const auto povm = tomo::build_povm(5, 256);
  ASSERT_EQ(povm.elements.rows(), 6);
  ASSERT_EQ(povm.n_bins(), 256u);
  for (int n = 0; n <= 5; ++n) EXPECT_NEAR(povm.elements.row(n).sum(), 1.0, 1e-10) << n;
  EXPECT_EQ(povm.bin_of(-8.0), 0u);
  EXPECT_EQ(povm.bin_of(8.0), 256u);
  EXPECT_EQ(povm.bin_of(0.01), 128u);
}

TEST(Povm, TooFewBins) {
  EXPECT_EQ(code_of([] { tomo::build_povm(5, 32); }), hs::ErrorCode::InvalidArgument);
}

TEST(MlDiagonal, ExactCountsRecoverDistribution) {
  const auto povm = tomo::build_povm(5, 256);
  const Eigen::VectorXd p = (Eigen::VectorXd(6) << 0.0576, 0.3648, 0.5776, 0.0, 0.0, 0.0).finished();
  const Eigen::VectorXd expected = 1e6 * (povm.elements.transpose() * p);
  std::vector<double> counts(expected.data(), expected.data() + expected.size());
  tomo::MLConfig cfg;
  cfg.max_iters = 20000;
  cfg.tol = 1e-14;
  const auto est = tomo::ml_diagonal_counts(counts, povm, cfg);
  EXPECT_NEAR(est.dist[0], 0.0576, 2e-3);
  EXPECT_NEAR(est.dist[1], 0.3648, 2e-3);
  EXPECT_NEAR(est.dist[2], 0.5776, 2e-3);
}

TEST(MlDiagonal, RecoversSampledStateWithinStandardErrors) {
  const std::vector<double> p{0.0576, 0.3648, 0.5776};
  const auto est = tomo::ml_diagonal(xs_from(diagonal(p), 100000, 4));
  EXPECT_TRUE(est.converged);
  ASSERT_EQ(est.dist.size(), 6u);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_GT(est.standard_errors[n], 0.0);
    EXPECT_LT(est.standard_errors[n], 0.02);
    EXPECT_NEAR(est.dist[n], p[n], 4.0 * est.standard_errors[n]) << n;
  }
  EXPECT_EQ(est.n_samples, 100000u);
}

TEST(MlDiagonal, LogLikelihoodMonotone) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto est = tomo::ml_diagonal(xs_from(diagonal({0.24, 0.76}), 20000, seed));
    const auto& h = est.log_likelihood_history;
    ASSERT_GT(h.size(), 2u);
    for (std::size_t k = 1; k < h.size(); ++k) EXPECT_GE(h[k], h[k - 1] - 1e-9 * std::abs(h[k])) << k;
  }
}

TEST(MlDiagonal, InvariantToSampleOrder) {
  auto xs = xs_from(diagonal({0.3, 0.3, 0.4}), 5000, 8);
  const auto a = tomo::ml_diagonal(xs);
  std::mt19937_64 rng(1);
  std::shuffle(xs.begin(), xs.end(), rng);
  const auto b = tomo::ml_diagonal(xs);
  for (std::size_t n = 0; n < a.dist.size(); ++n) EXPECT_EQ(a.dist[n], b.dist[n]);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(MlDiagonal, IterationCapReportsNotConverged) {
  tomo::MLConfig cfg;
  cfg.max_iters = 3;
  const auto est = tomo::ml_diagonal(xs_from(diagonal({0.3, 0.3, 0.4}), 5000, 8), cfg);
  EXPECT_FALSE(est.converged);
  EXPECT_FALSE(est.warnings.empty());
  double total = 0.0;
  for (double p : est.dist.probs()) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(MlDiagonal, EmptyInputAndSmallSampleWarning) {
  EXPECT_EQ(code_of([] { tomo::ml_diagonal(std::vector<double>{}); }), hs::ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([] { tomo::ml_diagonal(std::vector<double>{100.0}); }), hs::ErrorCode::EmptyInput);
  const auto est = tomo::ml_diagonal(xs_from(diagonal({1.0}), 500, 2));
  EXPECT_FALSE(est.warnings.empty());
}

TEST(MlFull, RecoversCoherence) {
  hd::Matrix rho(2, 2);
  rho << 0.5, 0.5, 0.5, 0.5;
  const auto samples = hd::sample_quadratures(rho, 100000, 12);
  tomo::MLConfig cfg;
  cfg.cutoff = 3;
  cfg.max_iters = 500;
  cfg.tol = 1e-9;
  const auto est = tomo::ml_full(samples, cfg);
  ASSERT_EQ(est.rho.rows(), 4);
  EXPECT_NEAR(est.rho.trace().real(), 1.0, 1e-12);
  EXPECT_LT((est.rho - est.rho.adjoint()).norm(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(est.rho);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  EXPECT_NEAR(est.rho(0, 0).real(), 0.5, 0.03);
  EXPECT_NEAR(est.rho(0, 1).real(), 0.5, 0.03);
  EXPECT_NEAR(est.rho(0, 1).imag(), 0.0, 0.03);
  const auto& h = est.log_likelihood_history;
  for (std::size_t k = 1; k < h.size(); ++k) EXPECT_GE(h[k], h[k - 1] - 1e-9 * std::abs(h[k]));
}

TEST(FockFidelity, SupportCheck) {
  const hs::analytic::PhotonDistribution d({0.2, 0.8});
  EXPECT_DOUBLE_EQ(tomo::fock_fidelity(d, 1), 0.8);
  EXPECT_EQ(code_of([&] { tomo::fock_fidelity(d, 2); }), hs::ErrorCode::CutoffExceeded);
}

TEST(EstimateJson, Keys) {
  const auto est = tomo::ml_diagonal(xs_from(diagonal({1.0}), 2000, 2));
  std::ostringstream out;
  tomo::write_estimate_json(out, est);
  for (const char* key : {"\"cutoff\"", "\"probs\"", "\"log_likelihood\"", "\"iterations\"", "\"converged\""}) {
    EXPECT_NE(out.str().find(key), std::string::npos) << key;
  }
}
