#include "fluctlab/spde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "fluctlab/io.hpp"

namespace fluctlab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
using cplx = std::complex<double>;

// Symmetric square root of a positive semidefinite matrix; tiny negative
// eigenvalues from rounding are clamped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd normals(Rng& rng, Eigen::Index d) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

// Rotation taking the (h_z, h_-z) coefficients of f to those of T^+_{c} f,
// with phi = 2 pi z c.
Eigen::Matrix2d rotation(double phi) {
  Eigen::Matrix2d R;
  R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return R;
}
}  // namespace

SpectralState::SpectralState(int z_max, int comps, double t0)
    : t(t0), z_max_(z_max), comps_(comps) {
  if (z_max < 1) throw std::invalid_argument("z_max must be >= 1");
  if (comps != 1 && comps != 2) throw std::invalid_argument("comps must be 1 or 2");
  data_.assign(std::size_t(comps) * std::size_t(z_max + 1), cplx{});
}

cplx& SpectralState::at(int comp, int z) {
  return data_[std::size_t(comp) * std::size_t(z_max_ + 1) + std::size_t(z)];
}

const cplx& SpectralState::at(int comp, int z) const {
  return data_[std::size_t(comp) * std::size_t(z_max_ + 1) + std::size_t(z)];
}

cplx SpectralState::coeff(int comp, int z) const {
  if (std::abs(z) > z_max_) return {};
  return z >= 0 ? at(comp, z) : std::conj(at(comp, -z));
}

double SpectralState::basis_value(int comp, int z) const {
  if (std::abs(z) > z_max_) return 0.0;
  if (z == 0) return at(comp, 0).real();
  return z > 0 ? kSqrt2 * at(comp, z).real() : kSqrt2 * at(comp, -z).imag();
}

void SpectralState::set_basis_values(int comp, int z, double value_pos, double value_neg) {
  if (z == 0) {
    at(comp, 0) = {value_pos, 0.0};
  } else {
    at(comp, z) = cplx(value_pos, value_neg) / kSqrt2;
  }
}

double SpectralState::test(int comp, const TestFunction& f) const {
  double s = 0.0;
  for (const auto& [z, c] : f.coefficients()) s += c * basis_value(comp, z);
  return s;
}

void OUParams::validate() const {
  if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows() || A.rows() < 1 ||
      A.rows() > 2) {
    throw std::invalid_argument("OU matrices must be square of equal size 1 or 2");
  }
  if ((A - A.transpose()).norm() > 1e-14 || (C - C.transpose()).norm() > 1e-14) {
    throw std::invalid_argument("OU matrices must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(A), ec(C);
  if (ea.eigenvalues().minCoeff() < -1e-14 || ec.eigenvalues().minCoeff() < -1e-14) {
    throw std::invalid_argument("OU matrices must be nonnegative");
  }
}

void DriftedOUParams::validate() const {
  if (!(lam >= 0) || !(mu >= 0)) throw std::invalid_argument("lam and mu must be >= 0");
  if (!(a_ >= 0) || !(d_ >= 0) || a_ * d_ - b_ * b_ < -1e-14) {
    throw std::invalid_argument("noise operator must be nonnegative: need a d - b^2 >= 0");
  }
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  const Eigen::Index d = A.rows();
  if (A.cols() != d || C.rows() != d || C.cols() != d) {
    throw std::invalid_argument("lyapunov_solve: dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::domain_error("lyapunov_solve: A must be positive definite");
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd K = Eigen::kroneckerProduct(I, A) + Eigen::kroneckerProduct(A, I);
  Eigen::VectorXd rhs = 2.0 * Eigen::Map<const Eigen::VectorXd>(C.data(), d * d);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) throw std::domain_error("lyapunov_solve: singular system");
  Eigen::VectorXd x = lu.solve(rhs);
  Eigen::MatrixXd D = Eigen::Map<Eigen::MatrixXd>(x.data(), d, d);
  D = 0.5 * (D + D.transpose()).eval();
  return D;
}

SpectralState ou_sample_stationary(const OUParams& p, int z_max, Rng& rng) {
  p.validate();
  const int d = int(p.A.rows());
  const Eigen::MatrixXd D = lyapunov_solve(p.A, p.C);
  const Eigen::MatrixXd L = psd_sqrt(D);
  SpectralState s(z_max, d);
  for (int z = 0; z <= z_max; ++z) {
    const Eigen::VectorXd pos = L * normals(rng, d);
    const Eigen::VectorXd neg = z == 0 ? Eigen::VectorXd::Zero(d) : Eigen::VectorXd(L * normals(rng, d));
    for (int c = 0; c < d; ++c) s.set_basis_values(c, z, pos(c), neg(c));
  }
  return s;
}

namespace {

// Mean factor and innovation covariance of one real mode coordinate over dt
// for dZ = -k^2 A Z dt + noise with covariance 2 k^2 C dt.
struct ModeTransition {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd noise_sqrt;
};

ModeTransition ou_transition(const OUParams& p, double k2, double dt) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.A);
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::Index d = p.A.rows();
  Eigen::VectorXd decay(d);
  for (Eigen::Index i = 0; i < d; ++i) decay(i) = std::exp(-k2 * lam(i) * dt);
  const Eigen::MatrixXd Ct = Q.transpose() * p.C * Q;
  Eigen::MatrixXd S(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double r = k2 * (lam(i) + lam(j));
      // 2 k^2 int_0^dt exp(-r s) ds, with the r -> 0 limit
      const double w = r * dt > 1e-12 ? 2.0 * k2 * (-std::expm1(-r * dt)) / r : 2.0 * k2 * dt;
      S(i, j) = Ct(i, j) * w;
    }
  }
  ModeTransition out;
  out.mean = Q * decay.asDiagonal() * Q.transpose();
  out.noise_sqrt = psd_sqrt(Q * S * Q.transpose());
  return out;
}

}  // namespace

OUPropagator::OUPropagator(const OUParams& p, int z_max, double dt)
    : d_(int(p.A.rows())), z_max_(z_max), dt_(dt) {
  p.validate();
  if (dt < 0.0) throw std::invalid_argument("ou_step: dt must be >= 0");
  mean_.resize(std::size_t(z_max + 1));
  noise_.resize(std::size_t(z_max + 1));
  for (int z = 1; z <= z_max; ++z) {
    const double k = kTwoPi * z;
    ModeTransition tr = ou_transition(p, k * k, dt);
    mean_[std::size_t(z)] = std::move(tr.mean);
    noise_[std::size_t(z)] = std::move(tr.noise_sqrt);
  }
}

void OUPropagator::step(SpectralState& state, Rng& rng) const {
  if (state.comps() != d_) throw std::invalid_argument("ou_step: component count mismatch");
  if (state.z_max() != z_max_) throw std::invalid_argument("ou_step: z_max mismatch");
  if (dt_ == 0.0) return;
  state.t += dt_;
  if (d_ == 1) {
    for (int z = 1; z <= z_max_; ++z) {
      const double m = mean_[std::size_t(z)](0, 0);
      const double l = noise_[std::size_t(z)](0, 0);
      auto& c = state.at(0, z);
      const double re = m * c.real() + l * rng.normal() / kSqrt2;
      const double im = m * c.imag() + l * rng.normal() / kSqrt2;
      c = {re, im};
    }
    return;
  }
  Eigen::VectorXd pos(d_), neg(d_);
  for (int z = 1; z <= z_max_; ++z) {
    for (int c = 0; c < d_; ++c) {
      pos(c) = state.basis_value(c, z);
      neg(c) = state.basis_value(c, -z);
    }
    pos = mean_[std::size_t(z)] * pos + noise_[std::size_t(z)] * normals(rng, d_);
    neg = mean_[std::size_t(z)] * neg + noise_[std::size_t(z)] * normals(rng, d_);
    for (int c = 0; c < d_; ++c) state.set_basis_values(c, z, pos(c), neg(c));
  }
}

SpectralState ou_step(const SpectralState& state, const OUParams& p, double dt, Rng& rng) {
  if (dt < 0.0) throw std::invalid_argument("ou_step: dt must be >= 0");
  SpectralState out = state;
  OUPropagator(p, state.z_max(), dt).step(out, rng);
  return out;
}

Eigen::MatrixXd ou_mode_covariance(const OUParams& p, int z, double lag) {
  const Eigen::MatrixXd D = lyapunov_solve(p.A, p.C);
  const double k = kTwoPi * z;
  Eigen::MatrixXd M = (-k * k * lag) * p.A;
  return M.exp() * D;
}

Eigen::Matrix4d drifted_ou_drift(const DriftedOUParams& p, int z, double t) {
  const double k = kTwoPi * z;
  Eigen::Matrix2d G;
  G << 0.0, -k, k, 0.0;
  const Eigen::Matrix2d R = rotation(k * p.c * t);
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  M.topLeftCorner<2, 2>() = -p.lam * k * k * Eigen::Matrix2d::Identity();
  M.bottomRightCorner<2, 2>() = -p.mu * k * k * Eigen::Matrix2d::Identity();
  M.bottomLeftCorner<2, 2>() = -p.theta * R * G.transpose();
  return M;
}

Eigen::Matrix4d drifted_ou_noise(const DriftedOUParams& p, int z, double t) {
  const double k = kTwoPi * z;
  const Eigen::Matrix2d R = rotation(k * p.c * t);
  Eigen::Matrix4d Q;
  Q.topLeftCorner<2, 2>() = p.a_ * Eigen::Matrix2d::Identity();
  Q.bottomRightCorner<2, 2>() = p.d_ * Eigen::Matrix2d::Identity();
  Q.topRightCorner<2, 2>() = p.b_ * R.transpose();
  Q.bottomLeftCorner<2, 2>() = p.b_ * R;
  return k * k * Q;
}

SpectralState drifted_ou_sample_initial(const DriftedOUParams& p, int z_max, Rng& rng) {
  p.validate();
  Eigen::Matrix2d D;
  const double off = p.b_ / (p.lam + p.mu);
  D << p.a_ / (2.0 * p.lam), off, off, p.d_ / (2.0 * p.mu);
  const Eigen::MatrixXd L = psd_sqrt(D);
  SpectralState s(z_max, 2);
  for (int z = 0; z <= z_max; ++z) {
    const Eigen::VectorXd pos = L * normals(rng, 2);
    const Eigen::VectorXd neg = z == 0 ? Eigen::VectorXd::Zero(2) : Eigen::VectorXd(L * normals(rng, 2));
    for (int c = 0; c < 2; ++c) s.set_basis_values(c, z, pos(c), neg(c));
  }
  return s;
}

SpectralState drifted_ou_step(const SpectralState& state, const DriftedOUParams& p, double dt,
                              Rng& rng) {
  p.validate();
  if (state.comps() != 2) throw std::invalid_argument("drifted_ou_step needs two components");
  if (dt == 0.0) return state;
  if (dt < 0.0) throw std::invalid_argument("drifted_ou_step: dt must be >= 0");
  SpectralState out = state;
  out.t = state.t + dt;
  const double t_mid = state.t + 0.5 * dt;
  for (int z = 1; z <= state.z_max(); ++z) {
    const Eigen::Matrix4d M = drifted_ou_drift(p, z, t_mid);
    const Eigen::Matrix4d Q = drifted_ou_noise(p, z, t_mid);
    // Van Loan: exp([[-M, Q], [0, M^T]] dt) = [[., F12], [0, F22]],
    // transition e^{M dt} = F22^T and innovation covariance F22^T F12.
    Eigen::Matrix<double, 8, 8> big = Eigen::Matrix<double, 8, 8>::Zero();
    big.topLeftCorner<4, 4>() = -M * dt;
    big.topRightCorner<4, 4>() = Q * dt;
    big.bottomRightCorner<4, 4>() = M.transpose() * dt;
    const Eigen::Matrix<double, 8, 8> E = big.exp();
    const Eigen::Matrix4d Phi = E.bottomRightCorner<4, 4>().transpose();
    const Eigen::Matrix4d S = Phi * E.topRightCorner<4, 4>();
    const Eigen::MatrixXd L = psd_sqrt(S);
    Eigen::Vector4d r(state.basis_value(0, z), state.basis_value(0, -z), state.basis_value(1, z),
                      state.basis_value(1, -z));
    Eigen::Vector4d next = Phi * r + L * normals(rng, 4);
    out.set_basis_values(0, z, next(0), next(1));
    out.set_basis_values(1, z, next(2), next(3));
  }
  return out;
}

Eigen::Matrix4d drifted_ou_propagator(const DriftedOUParams& p, int z, double s, double t,
                                      int substeps) {
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  Eigen::Matrix4d Phi = Eigen::Matrix4d::Identity();
  const double h = (t - s) / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Eigen::Matrix4d M = drifted_ou_drift(p, z, s + (i + 0.5) * h);
    Phi = (M * h).exp() * Phi;
  }
  return Phi;
}

std::pair<double, double> transport_solve(const SpectralState& initial, double theta, double c,
                                          double t, const TestFunction& f) {
  if (initial.comps() != 2) throw std::invalid_argument("transport_solve needs two components");
  const double z1 = initial.test(0, f);
  double z2 = initial.test(1, f);
  std::map<int, Eigen::Vector2d> pairs;
  for (const auto& [z, coef] : f.coefficients()) {
    if (z == 0) continue;
    Eigen::Vector2d& u = pairs.try_emplace(std::abs(z), Eigen::Vector2d::Zero()).first->second;
    if (z > 0) {
      u(0) = coef;
    } else {
      u(1) = coef;
    }
  }
  for (auto& [m, u] : pairs) {
    const double k = kTwoPi * m;
    const double w = k * c;
    // int_0^t R(-w s) ds
    Eigen::Matrix2d I;
    if (std::abs(w * t) < 1e-8) {
      I = t * Eigen::Matrix2d::Identity();
    } else {
      const double sn = std::sin(w * t);
      const double h = std::sin(0.5 * w * t);
      const double cm = 2.0 * h * h;  // 1 - cos(w t)
      I << sn / w, cm / w, -cm / w, sn / w;
    }
    Eigen::Matrix2d G;
    G << 0.0, -k, k, 0.0;
    const Eigen::Vector2d g = G * (I * u);
    z2 += theta * (g(0) * initial.basis_value(0, m) + g(1) * initial.basis_value(0, -m));
  }
  return {z1, z2};
}

namespace {

struct FftPlans {
  fftw_plan c2r;
  fftw_plan r2c;
};

std::mutex plan_mutex;

const FftPlans& plans_for(int N) {
  static std::map<int, FftPlans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;
  std::vector<double> re(static_cast<std::size_t>(N));
  std::vector<fftw_complex> co(static_cast<std::size_t>(N / 2 + 1));
  FftPlans p;
  p.c2r = fftw_plan_dft_c2r_1d(N, co.data(), re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.r2c = fftw_plan_dft_r2c_1d(N, re.data(), co.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(N, p).first->second;
}

}  // namespace

std::vector<double> to_grid(const SpectralState& state) {
  if (state.comps() != 1) throw std::invalid_argument("to_grid needs one component");
  const int N = 2 * state.z_max() + 1;
  const FftPlans& p = plans_for(N);
  std::vector<fftw_complex> in(static_cast<std::size_t>(state.z_max() + 1));
  for (int z = 0; z <= state.z_max(); ++z) {
    in[std::size_t(z)][0] = state.at(0, z).real();
    in[std::size_t(z)][1] = z == 0 ? 0.0 : state.at(0, z).imag();
  }
  std::vector<double> out(static_cast<std::size_t>(N));
  fftw_execute_dft_c2r(p.c2r, in.data(), out.data());
  return out;
}

void from_grid(std::span<const double> grid, SpectralState& state) {
  const int N = 2 * state.z_max() + 1;
  if (int(grid.size()) != N) throw std::invalid_argument("from_grid: grid size must be 2 z_max + 1");
  const FftPlans& p = plans_for(N);
  std::vector<double> in(grid.begin(), grid.end());
  std::vector<fftw_complex> out(static_cast<std::size_t>(state.z_max() + 1));
  fftw_execute_dft_r2c(p.r2c, in.data(), out.data());
  for (int z = 0; z <= state.z_max(); ++z) {
    const auto& o = out[std::size_t(z)];
    state.at(0, z) = z == 0 ? cplx(o[0] / N, 0.0) : cplx(o[0] / N, o[1] / N);
  }
}

namespace {

double max_abs(const std::vector<double>& y) {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return m;
}

void check_cfl(double cfl) {
  if (cfl > kSbeCflLimit) {
    throw std::domain_error("sbe_step: CFL number " + std::to_string(cfl) + " exceeds " +
                            std::to_string(kSbeCflLimit) + "; reduce dt");
  }
}

void burgers_rhs(const std::vector<double>& y, double scale, std::vector<double>& out) {
  const std::size_t N = y.size();
  auto flux = [&](std::size_t j) {
    const double a = y[j];
    const double b = y[j + 1 == N ? 0 : j + 1];
    return (b * b + b * a + a * a) / 3.0;
  };
  double prev = flux(N - 1);
  for (std::size_t j = 0; j < N; ++j) {
    const double cur = flux(j);
    out[j] = scale * (cur - prev);
    prev = cur;
  }
}

void burgers_rk4(std::vector<double>& y, double B, double dt, std::vector<double>& k,
                 std::vector<double>& acc, std::vector<double>& st) {
  const std::size_t N = y.size();
  const double scale = B * double(N);
  k.resize(N);
  acc.resize(N);
  st.resize(N);
  burgers_rhs(y, scale, k);
  for (std::size_t j = 0; j < N; ++j) {
    acc[j] = k[j];
    st[j] = y[j] + 0.5 * dt * k[j];
  }
  burgers_rhs(st, scale, k);
  for (std::size_t j = 0; j < N; ++j) {
    acc[j] += 2.0 * k[j];
    st[j] = y[j] + 0.5 * dt * k[j];
  }
  burgers_rhs(st, scale, k);
  for (std::size_t j = 0; j < N; ++j) {
    acc[j] += 2.0 * k[j];
    st[j] = y[j] + dt * k[j];
  }
  burgers_rhs(st, scale, k);
  for (std::size_t j = 0; j < N; ++j) y[j] += dt / 6.0 * (acc[j] + k[j]);
}

}  // namespace

double sbe_cfl_number(const SpectralState& state, double B, double dt) {
  const auto grid = to_grid(state);
  return dt * std::abs(B) * double(grid.size()) * max_abs(grid);
}

double sbe_default_dt(int z_max, double A, double B, double C) {
  const double N = 2.0 * z_max + 1.0;
  if (B == 0.0) return 1e-3;
  const double amp = 6.0 * std::sqrt(C / A * N);
  return 0.5 * kSbeCflLimit / (std::abs(B) * N * amp);
}

void sbe_nonlinear_step(SpectralState& state, double B, double dt) {
  if (B == 0.0 || dt == 0.0) return;
  std::vector<double> y = to_grid(state);
  std::vector<double> k, acc, st;
  burgers_rk4(y, B, dt, k, acc, st);
  from_grid(y, state);
}

SbeStepper::SbeStepper(int z_max, double A, double B, double C, double dt)
    : B_(B),
      ou_(OUParams{Eigen::MatrixXd::Constant(1, 1, A), Eigen::MatrixXd::Constant(1, 1, C)}, z_max,
          dt) {}

void SbeStepper::step(SpectralState& state, Rng& rng) {
  if (state.comps() != 1) throw std::invalid_argument("sbe_step needs one component");
  if (B_ != 0.0 && ou_.dt() != 0.0) {
    y_ = to_grid(state);
    check_cfl(ou_.dt() * std::abs(B_) * double(y_.size()) * max_abs(y_));
    burgers_rk4(y_, B_, ou_.dt(), k_, acc_, st_);
    from_grid(y_, state);
  }
  ou_.step(state, rng);
}

SpectralState sbe_step(const SpectralState& state, double A, double B, double C, double dt,
                       Rng& rng) {
  SpectralState out = state;
  SbeStepper(state.z_max(), A, B, C, dt).step(out, rng);
  return out;
}

QuadraticFunctional::QuadraticFunctional(int z_max, const TestFunction& f, std::vector<double> eps)
    : z_max_(z_max), eps_(std::move(eps)) {
  const TestFunction g = f.gradient();
  int zf = 0;
  for (const auto& [z, c] : g.coefficients()) zf = std::max(zf, std::abs(z));
  M_ = std::max(2 * (2 * z_max + 1), 2 * z_max + zf + 1);
  grad_f_.resize(std::size_t(M_));
  for (int j = 0; j < M_; ++j) grad_f_[std::size_t(j)] = g(double(j) / double(M_));
  q_.assign(eps_.size(), 0.0);
}

std::vector<double> QuadraticFunctional::spatial_terms(const SpectralState& state) {
  if (state.z_max() != z_max_ || state.comps() != 1) {
    throw std::invalid_argument("QuadraticFunctional: state shape mismatch");
  }
  const FftPlans& p = plans_for(M_);
  std::vector<fftw_complex> in(static_cast<std::size_t>(M_ / 2 + 1));
  std::vector<double> grid(static_cast<std::size_t>(M_));
  std::vector<double> out(eps_.size());
  for (std::size_t e = 0; e < eps_.size(); ++e) {
    for (auto& c : in) c[0] = c[1] = 0.0;
    in[0][0] = state.at(0, 0).real();
    for (int z = 1; z <= z_max_; ++z) {
      const double k = kTwoPi * z;
      const cplx w = (std::exp(cplx(0.0, k * eps_[e])) - 1.0) / cplx(0.0, k * eps_[e]);
      const cplx v = state.at(0, z) * w;
      in[std::size_t(z)][0] = v.real();
      in[std::size_t(z)][1] = v.imag();
    }
    fftw_execute_dft_c2r(p.c2r, in.data(), grid.data());
    double acc = 0.0;
    for (int j = 0; j < M_; ++j) acc += grid[std::size_t(j)] * grid[std::size_t(j)] * grad_f_[std::size_t(j)];
    out[e] = acc / double(M_);
  }
  return out;
}

void QuadraticFunctional::add(const SpectralState& state) {
  std::vector<double> cur = spatial_terms(state);
  if (count_ > 0) {
    const double h = state.t - prev_t_;
    for (std::size_t e = 0; e < q_.size(); ++e) q_[e] += 0.5 * (prev_[e] + cur[e]) * h;
  }
  prev_ = std::move(cur);
  prev_t_ = state.t;
  ++count_;
}

double sbe_quadratic_functional(std::span<const SpectralState> path, const TestFunction& f,
                                double eps) {
  if (path.size() < 2) throw std::invalid_argument("energy functional needs >= 2 states");
  QuadraticFunctional q(path.front().z_max(), f, {eps});
  for (const auto& s : path) q.add(s);
  return q.values()[0];
}

double sbe_energy_estimate(std::span<const std::vector<SpectralState>> paths,
                           const TestFunction& f, double eps1, double eps2) {
  if (!(eps2 <= eps1)) throw std::invalid_argument("energy estimate needs eps2 <= eps1");
  if (paths.empty()) throw std::invalid_argument("energy estimate needs at least one path");
  if (eps1 == eps2) return 0.0;
  double s = 0.0;
  for (const auto& path : paths) {
    if (path.size() < 2) throw std::invalid_argument("energy functional needs >= 2 states");
    QuadraticFunctional q(path.front().z_max(), f, {eps1, eps2});
    for (const auto& st : path) q.add(st);
    const double d = q.values()[0] - q.values()[1];
    s += d * d;
  }
  return s / double(paths.size());
}

void write_spectral_csv(std::ostream& out, const SpectralState& state) {
  out << "z,comp,re,im\n";
  for (int c = 0; c < state.comps(); ++c) {
    for (int z = 0; z <= state.z_max(); ++z) {
      out << z << ',' << c << ',' << format_double(state.at(c, z).real()) << ','
          << format_double(state.at(c, z).imag()) << '\n';
    }
  }
}

}  // namespace fluctlab
