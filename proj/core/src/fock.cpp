#include "heraldsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "heraldsim/error.hpp"

namespace heraldsim::fock {

namespace {

constexpr double kStateTolerance = 1e-12;
constexpr double kEigenFloor = -1e-10;
constexpr double kUnitarityTolerance = 1e-10;

void build_tuples(std::size_t n_modes, int budget, std::vector<int>& prefix,
                  std::vector<std::vector<int>>& out) {
  if (prefix.size() == n_modes) {
    out.push_back(prefix);
    return;
  }
  for (int n = 0; n <= budget; ++n) {
    prefix.push_back(n);
    build_tuples(n_modes, budget - n, prefix, out);
    prefix.pop_back();
  }
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

void require_cutoff(int n_max) {
  if (n_max < 0 || n_max > kMaxCutoff) {
    throw Error(ErrorCode::InvalidArgument, "photon cutoff must lie in [0, 4]");
  }
}

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Index map for "same tuple with one mode lowered by k".
std::size_t lowered_index(const FockBasis& basis, std::size_t index, std::size_t mode, int k) {
  std::vector<int> occ(basis.occupation(index).begin(), basis.occupation(index).end());
  occ[mode] -= k;
  return *basis.index_of(occ);
}

// Column j holds the old basis tuple j re-expressed over the new modes, given
// a_k^dagger = sum_m conj(U(m,k)) A_m^dagger.
Matrix basis_change_operator(const FockBasis& basis, const Matrix& unitary) {
  const auto dim = static_cast<Eigen::Index>(basis.size());
  const std::size_t m_modes = basis.n_modes();
  Matrix T = Matrix::Zero(dim, dim);
  Vector vacuum = Vector::Zero(dim);
  vacuum(0) = 1.0;

  std::vector<std::vector<Complex>> creation(m_modes, std::vector<Complex>(m_modes));
  for (std::size_t k = 0; k < m_modes; ++k) {
    for (std::size_t m = 0; m < m_modes; ++m) {
      creation[k][m] = std::conj(unitary(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)));
    }
  }

  for (Eigen::Index j = 0; j < dim; ++j) {
    const auto occ = basis.occupation(static_cast<std::size_t>(j));
    Vector v = vacuum;
    double norm = 1.0;
    for (std::size_t k = 0; k < m_modes; ++k) {
      for (int r = 0; r < occ[k]; ++r) {
        v = apply_creation(basis, v, creation[k]);
        norm *= static_cast<double>(r + 1);
      }
    }
    T.col(j) = v / std::sqrt(norm);
  }
  return T;
}

}  // namespace

// ---------------------------------------------------------------- FockBasis

FockBasis::FockBasis(std::size_t n_modes, int n_max) : n_modes_(n_modes), n_max_(n_max) {
  if (n_modes == 0) throw Error(ErrorCode::InvalidArgument, "Fock basis needs at least one mode");
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "negative photon cutoff");
  std::vector<int> prefix;
  build_tuples(n_modes, n_max, prefix, tuples_);
}

int FockBasis::total(std::size_t index) const noexcept {
  return std::accumulate(tuples_[index].begin(), tuples_[index].end(), 0);
}

std::optional<std::size_t> FockBasis::index_of(std::span<const int> occupation) const {
  if (occupation.size() != n_modes_) return std::nullopt;
  const auto it = std::lower_bound(
      tuples_.begin(), tuples_.end(), occupation, [](const std::vector<int>& a, std::span<const int> b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
      });
  if (it == tuples_.end() || !std::equal(it->begin(), it->end(), occupation.begin(), occupation.end())) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - tuples_.begin());
}

// ------------------------------------------------------------- ModeRegister

ModeRegister::ModeRegister(std::vector<modes::ModeFunction> modes, double gram_tolerance)
    : modes_(std::move(modes)), n_modes_(modes_.size()) {
  if (modes_.empty()) throw Error(ErrorCode::InvalidArgument, "mode register is empty");
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = modes::overlap(modes_[i], modes_[j]);
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(g - target) > gram_tolerance) {
        throw Error(ErrorCode::InvalidArgument, "register modes are not orthonormal");
      }
    }
  }
}

ModeRegister ModeRegister::abstract(std::size_t n_modes) {
  if (n_modes == 0) throw Error(ErrorCode::InvalidArgument, "mode register is empty");
  ModeRegister r;
  r.n_modes_ = n_modes;
  return r;
}

std::vector<double> ModeRegister::coefficients(const modes::ModeFunction& f) const {
  if (!has_waveforms()) {
    throw Error(ErrorCode::GridMismatch, "abstract register has no waveforms to project on");
  }
  std::vector<double> c(modes_.size());
  for (std::size_t m = 0; m < modes_.size(); ++m) c[m] = modes::overlap(modes_[m], f);
  return c;
}

// ----------------------------------------------------------- MultimodeState

MultimodeState::MultimodeState(ModeRegister reg, int n_max, Matrix rho)
    : register_(std::move(reg)), basis_(register_.size(), n_max), rho_(std::move(rho)) {
  require_cutoff(n_max);
  const auto dim = static_cast<Eigen::Index>(basis_.size());
  if (rho_.rows() != dim || rho_.cols() != dim) {
    throw Error(ErrorCode::InvalidDensity, "density matrix dimension does not match the Fock basis");
  }
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance) {
    throw Error(ErrorCode::InvalidDensity, "density matrix is not Hermitian");
  }
  if (std::abs(rho_.trace().real() - 1.0) > kStateTolerance) {
    throw Error(ErrorCode::InvalidDensity, "density matrix trace differs from one");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rho_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kEigenFloor) {
    throw Error(ErrorCode::InvalidDensity, "density matrix has a negative eigenvalue");
  }
}

MultimodeState MultimodeState::pure(ModeRegister reg, int n_max, const Vector& psi) {
  return MultimodeState(std::move(reg), n_max, psi * psi.adjoint());
}

double MultimodeState::purity() const { return (rho_ * rho_).trace().real(); }

std::vector<double> MultimodeState::total_photon_distribution() const {
  std::vector<double> p(static_cast<std::size_t>(n_max()) + 1, 0.0);
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    p[static_cast<std::size_t>(basis_.total(i))] += rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return p;
}

// ---------------------------------------------------------------- operations

DecompositionCoeffs decomposition_coeffs(const modes::ModeFunction& g1,
                                         const modes::ModeFunction& g2,
                                         const ModeRegister& reg) {
  DecompositionCoeffs d;
  d.alpha = reg.coefficients(g1);
  d.beta = reg.coefficients(g2);
  const auto m = static_cast<Eigen::Index>(reg.size());
  d.C.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) d.C(i, j) = d.alpha[i] * d.beta[j];
  }
  return d;
}

Vector apply_creation(const FockBasis& basis, const Vector& psi, std::span<const Complex> coeffs) {
  if (coeffs.size() != basis.n_modes() || static_cast<std::size_t>(psi.size()) != basis.size()) {
    throw Error(ErrorCode::InvalidArgument, "creation operator does not match the Fock basis");
  }
  Vector out = Vector::Zero(psi.size());
  std::vector<int> occ(basis.n_modes());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex a = psi(static_cast<Eigen::Index>(i));
    if (a == Complex(0.0) || basis.total(i) >= basis.n_max()) continue;
    const auto src = basis.occupation(i);
    for (std::size_t m = 0; m < basis.n_modes(); ++m) {
      if (coeffs[m] == Complex(0.0)) continue;
      std::copy(src.begin(), src.end(), occ.begin());
      occ[m] += 1;
      const std::size_t j = *basis.index_of(occ);
      out(static_cast<Eigen::Index>(j)) += coeffs[m] * std::sqrt(static_cast<double>(occ[m])) * a;
    }
  }
  return out;
}

namespace {

Vector unnormalized_heralded_vector(const modes::ModeFunction& g1, const modes::ModeFunction& g2,
                                    const ModeRegister& reg, const FockBasis& basis) {
  const auto d = decomposition_coeffs(g1, g2, reg);
  const double deficit1 = g1.norm_squared() - std::inner_product(d.alpha.begin(), d.alpha.end(), d.alpha.begin(), 0.0);
  const double deficit2 = g2.norm_squared() - std::inner_product(d.beta.begin(), d.beta.end(), d.beta.begin(), 0.0);
  if (deficit1 > kMaxSpanDeficit || deficit2 > kMaxSpanDeficit) {
    throw Error(ErrorCode::SpanDeficit, "register does not span the trigger modes");
  }
  std::vector<Complex> a(d.alpha.begin(), d.alpha.end());
  std::vector<Complex> b(d.beta.begin(), d.beta.end());
  Vector v = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
  v(0) = 1.0;
  v = apply_creation(basis, v, b);
  return apply_creation(basis, v, a);
}

}  // namespace

double heralded_state_norm(const modes::ModeFunction& g1, const modes::ModeFunction& g2,
                           const ModeRegister& reg) {
  const FockBasis basis(reg.size(), 2);
  return unnormalized_heralded_vector(g1, g2, reg, basis).norm();
}

MultimodeState build_heralded_state(const modes::ModeFunction& g1, const modes::ModeFunction& g2,
                                    const ModeRegister& reg, int n_max) {
  if (n_max < 2 || n_max > kMaxCutoff) {
    throw Error(ErrorCode::InvalidArgument, "heralded two-photon state needs cutoff in [2, 4]");
  }
  const FockBasis basis(reg.size(), n_max);
  Vector psi = unnormalized_heralded_vector(g1, g2, reg, basis);
  psi /= psi.norm();
  return MultimodeState::pure(reg, n_max, psi);
}

MultimodeState apply_loss_channel(const MultimodeState& state, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::OutOfRange, "eta must lie in [0, 1]");
  const FockBasis& basis = state.basis();
  const int n_max = basis.n_max();

  // kraus[n][k] = sqrt(C(n,k) eta^(n-k) (1-eta)^k): amplitude of losing k of n photons.
  std::vector<std::vector<double>> kraus(n_max + 1, std::vector<double>(n_max + 1, 0.0));
  for (int n = 0; n <= n_max; ++n) {
    for (int k = 0; k <= n; ++k) {
      kraus[n][k] = std::sqrt(binomial(n, k) * std::pow(eta, n - k) * std::pow(1.0 - eta, k));
    }
  }

  Matrix rho = state.rho();
  const auto dim = static_cast<Eigen::Index>(basis.size());
  for (std::size_t mode = 0; mode < basis.n_modes(); ++mode) {
    Matrix next = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const int ni = basis.occupation(static_cast<std::size_t>(i))[mode];
      for (Eigen::Index j = 0; j < dim; ++j) {
        const Complex r = rho(i, j);
        if (r == Complex(0.0)) continue;
        const int nj = basis.occupation(static_cast<std::size_t>(j))[mode];
        for (int k = 0; k <= std::min(ni, nj); ++k) {
          const auto ii = static_cast<Eigen::Index>(lowered_index(basis, static_cast<std::size_t>(i), mode, k));
          const auto jj = static_cast<Eigen::Index>(lowered_index(basis, static_cast<std::size_t>(j), mode, k));
          next(ii, jj) += kraus[ni][k] * kraus[nj][k] * r;
        }
      }
    }
    rho = std::move(next);
  }
  return MultimodeState(state.mode_register(), n_max, hermitize(rho));
}

MultimodeState change_mode_basis(const MultimodeState& state, const Matrix& unitary) {
  const auto m = static_cast<Eigen::Index>(state.mode_register().size());
  if (unitary.rows() != m || unitary.cols() != m) {
    throw Error(ErrorCode::NotUnitary, "basis change matrix has the wrong size");
  }
  const double defect = (unitary * unitary.adjoint() - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
  if (!(defect <= kUnitarityTolerance)) {
    throw Error(ErrorCode::NotUnitary, "basis change matrix is not unitary");
  }

  const Matrix T = basis_change_operator(state.basis(), unitary);
  Matrix rho = hermitize(T * state.rho() * T.adjoint());
  // Absorbs the unitarity slack admitted above.
  rho /= rho.trace().real();

  const auto& reg = state.mode_register();
  const bool real = unitary.imag().cwiseAbs().maxCoeff() <= 1e-12;
  if (!real || !reg.has_waveforms()) {
    return MultimodeState(ModeRegister::abstract(reg.size()), state.n_max(), std::move(rho));
  }
  const auto& old_modes = reg.modes();
  std::vector<modes::ModeFunction> rotated;
  rotated.reserve(old_modes.size());
  const std::size_t n = old_modes.front().size();
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> s(n, 0.0);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double u = unitary(i, k).real();
      const auto& h = old_modes[static_cast<std::size_t>(k)];
      for (std::size_t t = 0; t < n; ++t) s[t] += u * h[t];
    }
    rotated.emplace_back(old_modes.front().grid(), std::move(s), true);
  }
  return MultimodeState(ModeRegister(std::move(rotated)), state.n_max(), std::move(rho));
}

Matrix reduce_to_register_mode(const MultimodeState& state, std::size_t mode) {
  const FockBasis& basis = state.basis();
  if (mode >= basis.n_modes()) throw Error(ErrorCode::InvalidArgument, "register mode out of range");
  const int n_max = basis.n_max();
  Matrix out = Matrix::Zero(n_max + 1, n_max + 1);
  std::vector<int> other(basis.n_modes());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto occ_i = basis.occupation(i);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const auto occ_j = basis.occupation(j);
      bool same_rest = true;
      for (std::size_t k = 0; k < basis.n_modes() && same_rest; ++k) {
        if (k != mode && occ_i[k] != occ_j[k]) same_rest = false;
      }
      if (!same_rest) continue;
      out(occ_i[mode], occ_j[mode]) += state.rho()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

Matrix reduce_to_mode(const MultimodeState& state, const modes::ModeFunction& xi) {
  const auto& reg = state.mode_register();
  const std::vector<double> c = reg.coefficients(xi);
  const std::size_t m = c.size();

  // Unit vector (c, r) over register + one auxiliary vacuum mode.
  Eigen::VectorXd v(static_cast<Eigen::Index>(m + 1));
  double inside = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    v(static_cast<Eigen::Index>(k)) = c[k];
    inside += c[k] * c[k];
  }
  v(static_cast<Eigen::Index>(m)) = std::sqrt(std::max(0.0, xi.norm_squared() - inside));
  v /= v.norm();

  // Householder reflection with first row (and column) v.
  const auto dim = static_cast<Eigen::Index>(m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd u = v;
  u(0) -= 1.0;
  const double uu = u.squaredNorm();
  if (uu > 1e-30) H -= (2.0 / uu) * u * u.transpose();

  const FockBasis& small = state.basis();
  const FockBasis big(m + 1, small.n_max());
  std::vector<Eigen::Index> embed(small.size());
  std::vector<int> occ(m + 1, 0);
  for (std::size_t i = 0; i < small.size(); ++i) {
    const auto o = small.occupation(i);
    std::copy(o.begin(), o.end(), occ.begin());
    occ[m] = 0;
    embed[i] = static_cast<Eigen::Index>(*big.index_of(occ));
  }
  Matrix rho = Matrix::Zero(static_cast<Eigen::Index>(big.size()), static_cast<Eigen::Index>(big.size()));
  for (std::size_t i = 0; i < small.size(); ++i) {
    for (std::size_t j = 0; j < small.size(); ++j) {
      rho(embed[i], embed[j]) = state.rho()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  const MultimodeState extended(ModeRegister::abstract(m + 1), small.n_max(), std::move(rho));
  const MultimodeState rotated = change_mode_basis(extended, H.cast<Complex>());
  return reduce_to_register_mode(rotated, 0);
}

analytic::PhotonDistribution photon_distribution(const Matrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    throw Error(ErrorCode::InvalidDensity, "single-mode density matrix must be square");
  }
  std::vector<double> p(static_cast<std::size_t>(rho.rows()));
  for (Eigen::Index n = 0; n < rho.rows(); ++n) p[static_cast<std::size_t>(n)] = std::max(0.0, rho(n, n).real());
  return analytic::PhotonDistribution(std::move(p));
}

void write_density_json(std::ostream& out, const Matrix& rho) {
  nlohmann::json j;
  j["dimension"] = rho.rows();
  std::vector<double> re;
  std::vector<double> im;
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho.cols(); ++c) {
      re.push_back(rho(r, c).real());
      im.push_back(rho(r, c).imag());
    }
  }
  j["real"] = re;
  j["imag"] = im;
  out << j.dump(2) << '\n';
}

Matrix read_density_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed density JSON: ") + e.what());
  }
  const auto dim = j.at("dimension").get<Eigen::Index>();
  const auto re = j.at("real").get<std::vector<double>>();
  const auto im = j.at("imag").get<std::vector<double>>();
  if (dim <= 0 || re.size() != static_cast<std::size_t>(dim * dim) || im.size() != re.size()) {
    throw Error(ErrorCode::IoError, "density JSON has inconsistent dimensions");
  }
  Matrix rho(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto k = static_cast<std::size_t>(r * dim + c);
      rho(r, c) = Complex(re[k], im[k]);
    }
  }
  return rho;
}

}  // namespace heraldsim::fock
