#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/error.hpp"
#include "heraldsim/fock.hpp"
#include "heraldsim/modes.hpp"

namespace hs = heraldsim;
namespace fk = heraldsim::fock;
using hs::modes::ModeFunction;

namespace {

constexpr double kGamma = 53e6;

struct Setup {
  ModeFunction g1, g2;
  std::vector<ModeFunction> basis;
  double overlap;
};

Setup setup(double delay, std::size_t n_modes = 3) {
  const auto grid = hs::modes::TimeGrid::from_window();
  auto g1 = hs::modes::make_trigger_mode(220e-9, kGamma, grid);
  auto g2 = hs::modes::make_trigger_mode(220e-9 + delay, kGamma, grid);
  const std::vector<ModeFunction> seeds{g1, g2};
  auto basis = hs::modes::extend_orthonormal_basis(seeds, grid, n_modes);
  const double I = hs::modes::overlap(g1, g2);
  return {std::move(g1), std::move(g2), std::move(basis), I};
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

TEST(FockBasis, LexicographicOrderTwoModes) {
  const fk::FockBasis b(2, 2);
  const std::vector<std::vector<int>> expected{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {2, 0}};
  ASSERT_EQ(b.size(), expected.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto occ = b.occupation(i);
    EXPECT_EQ(std::vector<int>(occ.begin(), occ.end()), expected[i]);
    EXPECT_EQ(b.index_of(expected[i]), i);
  }
  const std::vector<int> too_many{2, 1};
  EXPECT_FALSE(b.index_of(too_many).has_value());
}

TEST(FockBasis, SizeIsBinomial) {
  EXPECT_EQ(fk::FockBasis(3, 2).size(), 10u);
  EXPECT_EQ(fk::FockBasis(4, 4).size(), 70u);
  EXPECT_EQ(fk::FockBasis(1, 4).size(), 5u);
}

TEST(HeraldedState, NormMatchesOverlap) {
  for (double d : {1e-9, 10e-9, 40e-9}) {
    const auto s = setup(d);
    const fk::ModeRegister reg(s.basis);
    EXPECT_NEAR(fk::heralded_state_norm(s.g1, s.g2, reg), std::sqrt(1.0 + s.overlap * s.overlap), 1e-10);
  }
}

TEST(HeraldedState, DecompositionCoefficients) {
  const auto s = setup(10e-9);
  const fk::ModeRegister reg(s.basis);
  const auto c = fk::decomposition_coeffs(s.g1, s.g2, reg);
  EXPECT_NEAR(c.alpha[0], 1.0, 1e-12);
  EXPECT_NEAR(c.alpha[1], 0.0, 1e-12);
  EXPECT_NEAR(c.beta[0], s.overlap, 1e-12);
  EXPECT_NEAR(c.beta[1], std::sqrt(1.0 - s.overlap * s.overlap), 1e-12);
  EXPECT_NEAR(c.C(0, 1), c.alpha[0] * c.beta[1], 1e-15);
}

TEST(HeraldedState, TwoPhotonsAndPure) {
  const auto s = setup(10e-9);
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
  EXPECT_NEAR(state.trace(), 1.0, 1e-12);
  EXPECT_NEAR(state.purity(), 1.0, 1e-12);
  const auto total = state.total_photon_distribution();
  EXPECT_NEAR(total[2], 1.0, 1e-12);
}

TEST(HeraldedState, SpanDeficitWhenRegisterMissesTrigger) {
  const auto s = setup(10e-9);
  const std::vector<ModeFunction> only_g1{s.basis[0], s.basis[2]};
  EXPECT_EQ(code_of([&] { fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(only_g1), 2); }),
            hs::ErrorCode::SpanDeficit);
}

TEST(ReducedStates, MatchClosedFormsWithGridOverlap) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> delay(0.3e-9, 40e-9);
  for (int k = 0; k < 10; ++k) {
    const auto s = setup(delay(rng));
    const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
    const auto sym = hs::modes::make_symmetric_antisymmetric(s.g1, s.g2);
    const auto f1 = fk::photon_distribution(fk::reduce_to_mode(state, sym.symmetric));
    const auto f2 = fk::photon_distribution(fk::reduce_to_mode(state, sym.antisymmetric));
    const auto g1 = fk::photon_distribution(fk::reduce_to_mode(state, s.g1));
    const auto fid = hs::analytic::fidelity_optimal(s.overlap);
    const auto fixed = hs::analytic::fixed_mode_distribution(s.overlap);
    EXPECT_NEAR(f1[2], fid.plus, 1e-10);
    EXPECT_NEAR(f2[2], fid.minus, 1e-10);
    for (std::size_t n = 0; n < 3; ++n) EXPECT_NEAR(g1[n], fixed[n], 1e-10);
  }
}

TEST(LossChannel, TracePreservingAndMatchesBinomialLoss) {
  const auto s = setup(6e-9);
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
  for (double eta : {0.0, 0.3, 0.76, 1.0}) {
    const auto lossy = fk::apply_loss_channel(state, eta);
    EXPECT_NEAR(lossy.trace(), 1.0, 1e-12);
    const auto g1 = fk::photon_distribution(fk::reduce_to_mode(lossy, s.g1));
    const auto expected = hs::analytic::fixed_mode_distribution_with_loss(s.overlap, eta);
    for (std::size_t n = 0; n < 3; ++n) EXPECT_NEAR(g1[n], expected[n], 1e-10) << eta;
  }
}

TEST(LossChannel, CommutesWithPassiveBasisChange) {
  const auto s = setup(12e-9, 2);
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
  const double c = std::cos(0.4), sn = std::sin(0.4);
  fk::Matrix U(2, 2);
  U << c, sn, -sn, c;
  const auto a = fk::apply_loss_channel(fk::change_mode_basis(state, U), 0.6);
  const auto b = fk::change_mode_basis(fk::apply_loss_channel(state, 0.6), U);
  EXPECT_LT((a.rho() - b.rho()).norm(), 1e-12);
}

TEST(BasisChange, IdentityAndUnitarityCheck) {
  const auto s = setup(12e-9, 2);
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
  const auto same = fk::change_mode_basis(state, fk::Matrix::Identity(2, 2));
  EXPECT_LT((same.rho() - state.rho()).norm(), 1e-13);
  fk::Matrix bad = fk::Matrix::Identity(2, 2) * 1.1;
  EXPECT_EQ(code_of([&] { fk::change_mode_basis(state, bad); }), hs::ErrorCode::NotUnitary);
}

TEST(BasisChange, ComplexUnitaryGivesAbstractRegister) {
  const auto s = setup(12e-9, 2);
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
  fk::Matrix U(2, 2);
  U << fk::Complex(0, 1), 0, 0, 1;
  const auto out = fk::change_mode_basis(state, U);
  EXPECT_FALSE(out.mode_register().has_waveforms());
  EXPECT_NEAR(out.trace(), 1.0, 1e-12);
}

TEST(ReduceToMode, OrthogonalModeSeesVacuum) {
  const auto s = setup(12e-9, 3);
  const std::vector<ModeFunction> two{s.basis[0], s.basis[1]};
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(two), 2);
  const auto rho = fk::reduce_to_mode(state, s.basis[2]);
  EXPECT_NEAR(rho(0, 0).real(), 1.0, 1e-12);
}

TEST(ReduceToMode, RegisterModeAgreesWithWaveformPath) {
  const auto s = setup(12e-9, 2);
  const auto state = fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2);
  const auto a = fk::reduce_to_register_mode(state, 1);
  const auto b = fk::reduce_to_mode(state, s.basis[1]);
  EXPECT_LT((a - b).norm(), 1e-12);
}

TEST(MultimodeState, RejectsNonHermitianAndBadTrace) {
  const auto reg = fk::ModeRegister::abstract(1);
  fk::Matrix rho = fk::Matrix::Zero(3, 3);
  rho(0, 0) = 0.5;
  EXPECT_EQ(code_of([&] { fk::MultimodeState(reg, 2, rho); }), hs::ErrorCode::InvalidDensity);
  rho(1, 1) = 0.5;
  rho(0, 1) = 0.1;
  EXPECT_EQ(code_of([&] { fk::MultimodeState(reg, 2, rho); }), hs::ErrorCode::InvalidDensity);
}

TEST(DensityJson, RoundTrip) {
  const auto s = setup(12e-9, 2);
  const auto state = fk::apply_loss_channel(
      fk::build_heralded_state(s.g1, s.g2, fk::ModeRegister(s.basis), 2), 0.76);
  fk::Matrix U(2, 2);
  U << fk::Complex(0.6, 0.0), fk::Complex(0.0, 0.8), fk::Complex(0.0, 0.8), fk::Complex(0.6, 0.0);
  const auto rho = fk::change_mode_basis(state, U).rho();
  std::stringstream io;
  fk::write_density_json(io, rho);
  const auto back = fk::read_density_json(io);
  ASSERT_EQ(back.rows(), rho.rows());
  EXPECT_LT((back - rho).cwiseAbs().maxCoeff(), 1e-15);
}
