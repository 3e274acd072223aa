#include "fluctlab/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fluctlab/ensemble.hpp"
#include "fluctlab/equilibrium.hpp"

namespace fluctlab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sum_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}
}  // namespace

Estimate mean_of(std::span<const double> xs) {
  const double n = double(xs.size());
  if (xs.empty()) return {kNaN, kNaN};
  const double m = sum_of(xs) / n;
  if (xs.size() < 2) return {m, kNaN};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

Estimate variance_of(std::span<const double> xs) {
  const double n = double(xs.size());
  if (xs.size() < 2) return {kNaN, kNaN};
  const double m = sum_of(xs) / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double var = m2 / (n - 1.0);
  m2 /= n;
  m4 /= n;
  return {var, std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

Estimate covariance_of(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("covariance_of: length mismatch");
  const double n = double(xs.size());
  if (xs.size() < 2) return {kNaN, kNaN};
  const double mx = sum_of(xs) / n;
  const double my = sum_of(ys) / n;
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  Estimate e = mean_of(prod);
  e.value *= n / (n - 1.0);
  return e;
}

Estimate product_mean_of(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("product_mean_of: length mismatch");
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = xs[i] * ys[i];
  return mean_of(prod);
}

EnsembleStats::EnsembleStats(std::vector<std::string> keys)
    : keys_(std::move(keys)), columns_(keys_.size()) {}

void EnsembleStats::add(std::span<const double> sample) {
  if (sample.size() != keys_.size()) throw std::invalid_argument("EnsembleStats: sample size mismatch");
  for (std::size_t i = 0; i < sample.size(); ++i) columns_[i].push_back(sample[i]);
  ++count_;
}

std::size_t EnsembleStats::index(const std::string& key) const {
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (keys_[i] == key) return i;
  }
  throw std::out_of_range("EnsembleStats: unknown key " + key);
}

Report compare_se(std::string quantity, const Estimate& empirical, double predicted, double k) {
  Report r;
  r.quantity = std::move(quantity);
  r.empirical = empirical.value;
  r.predicted = predicted;
  if (std::isfinite(empirical.se)) {
    r.se = empirical.se;
    const double diff = empirical.value - predicted;
    r.z_score = empirical.se > 0 ? diff / empirical.se : (diff == 0 ? 0.0 : std::copysign(INFINITY, diff));
    r.pass = std::abs(diff) <= k * empirical.se;
  }
  return r;
}

Report compare_relative(std::string quantity, const Estimate& empirical, double predicted,
                        double rel) {
  Report r;
  r.quantity = std::move(quantity);
  r.empirical = empirical.value;
  r.predicted = predicted;
  if (std::isfinite(empirical.se)) {
    r.se = empirical.se;
    if (empirical.se > 0) r.z_score = (empirical.value - predicted) / empirical.se;
  }
  r.pass = std::abs(empirical.value - predicted) <= rel * std::abs(predicted);
  return r;
}

ScalingFit fit_scaling(std::span<const double> xs, std::span<const double> ys,
                       std::span<const double> y_se) {
  const std::size_t m = xs.size();
  if (m < 3 || ys.size() != m || (!y_se.empty() && y_se.size() != m)) {
    throw std::invalid_argument("scaling fit needs >= 3 points of matching length");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw std::invalid_argument("scaling fit: non-finite log value (zero variance?)");
    }
    if (!y_se.empty() && !(y_se[i] > 0 && std::isfinite(y_se[i]))) {
      throw std::invalid_argument("scaling fit: standard errors must be positive");
    }
  }
  std::vector<double> w(m, 1.0);
  if (!y_se.empty()) {
    for (std::size_t i = 0; i < m; ++i) w[i] = 1.0 / (y_se[i] * y_se[i]);
  }
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sw += w[i];
    sx += w[i] * xs[i];
    sy += w[i] * ys[i];
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += w[i] * (xs[i] - xbar) * (xs[i] - xbar);
    sxy += w[i] * (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0)) throw std::invalid_argument("scaling fit: xs must not all coincide");
  ScalingFit fit;
  fit.xs.assign(xs.begin(), xs.end());
  fit.ys.assign(ys.begin(), ys.end());
  fit.y_se.assign(y_se.begin(), y_se.end());
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (!y_se.empty()) {
    fit.slope_se = std::sqrt(1.0 / sxx);
  } else {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = ys[i] - fit.intercept - fit.slope * xs[i];
      rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / double(m - 2) / sxx);
  }
  return fit;
}

namespace {

// n-point lattice values of g and of its forward difference quotient.
void lattice_grad(std::span<const double> g, std::vector<double>& grad) {
  const std::size_t n = g.size();
  grad.resize(n);
  for (std::size_t x = 0; x < n; ++x) grad[x] = double(n) * (g[(x + 1) % n] - g[x]);
}

}  // namespace

std::vector<double> martingale_residual(const Trajectory& traj, const ModelParams& params,
                                        const TestFunction& f1, const TestFunction& f2) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  const double nd = double(n);
  const Moments m = moments(params);
  const double c = cn(params);
  const double theta = params.theta_n();
  const double an = params.alpha_n();
  const double b = params.b;
  const double sq = std::sqrt(nd);

  std::vector<int> modes;
  for (const auto& [z, coef] : f1.coefficients()) modes.push_back(z);
  for (const auto& [z, coef] : f2.coefficients()) modes.push_back(z);
  if (modes.empty()) modes.push_back(0);
  const ModeProjector proj(params, modes);
  const TestFunction df1 = f1.gradient();

  const std::vector<double> g = proj.evaluate_on_lattice(f2, 0.0);
  std::vector<double> grad_g;
  lattice_grad(g, grad_g);

  std::vector<double> field(traj.times.size()), gen(traj.times.size());
  std::vector<double> F, dF, gradF;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const auto& cfg = traj.states[i];
    const double off = frame_offset(c, traj.times[i]);
    F = proj.evaluate_on_lattice(f1, off);
    dF = proj.evaluate_on_lattice(df1, off);
    lattice_grad(F, gradF);
    std::vector<double> xi(n);
    for (std::size_t x = 0; x < n; ++x) xi[x] = std::exp(-b * cfg[x]);

    double y = 0, v = 0, ds = 0, lapY = 0, quad = 0, lapV = 0, driftV = 0;
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t xp = (x + 1) % n;
      const std::size_t xm = (x + n - 1) % n;
      const double xib = xi[x] - m.rho;
      const double etab = cfg[x] - m.v;
      y += F[x] * xib;
      v += g[x] * etab;
      ds += dF[x] * xib;
      lapY += nd * nd * (F[xp] + F[xm] - 2.0 * F[x]) * xib;
      quad += gradF[x] * xi[x] * xi[xp];
      lapV += nd * nd * (g[xp] + g[xm] - 2.0 * g[x]) * etab;
      driftV += grad_g[x] * (xi[x] + xi[xp]);
    }
    field[i] = (y + v) / sq;
    gen[i] = c * ds / sq + params.gamma * theta / (nd * nd) * (lapY + lapV) / sq -
             b * b * theta * an / (nd * sq) * quad + b * theta * an / (nd * sq) * driftV;
  }

  std::vector<double> out(traj.times.size(), 0.0);
  double integral = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    integral += 0.5 * (gen[i] + gen[i - 1]) * (traj.times[i] - traj.times[i - 1]);
    out[i] = field[i] - field[0] - integral;
  }
  return out;
}

double bg_integrand(std::span<const double> xi, std::span<const double> psi_lattice, double rho,
                    double tau2, int L) {
  const std::size_t n = xi.size();
  if (L < 1) throw std::invalid_argument("box size floor(eps n) must be >= 1");
  // prefix sums of centered xi over two periods for wrap-around boxes
  std::vector<double> pre(2 * n + 1, 0.0);
  for (std::size_t i = 0; i < 2 * n; ++i) pre[i + 1] = pre[i] + (xi[i % n] - rho);
  double s = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double box = (pre[x + 1 + std::size_t(L)] - pre[x + 1]) / double(L);
    const double w = (xi[x] - rho) * (xi[(x + 1) % n] - rho) - box * box + tau2 / double(L);
    s += psi_lattice[x] * w;
  }
  return s;
}

double bg_rhs_shape(const ModelParams& params, const TestFunction& psi, double eps, double t) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  double norm = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double p = psi(double(x) / double(n));
    norm += p * p;
  }
  norm /= double(n);
  return t * norm * (eps + t / (eps * eps * double(n)));
}

double bg_static_moment(const ModelParams& params, const TestFunction& psi, double eps) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  const int L = static_cast<int>(std::floor(eps * double(n)));
  if (L < 1) throw std::invalid_argument("bg test needs floor(eps n) >= 1");
  const GammaLaw law = site_law(params);
  const double k = law.shape;
  const double tau2 = k / (law.rate * law.rate);
  const double mu4 = (3.0 * k * k + 6.0 * k) / std::pow(law.rate, 4);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  const double w = 1.0 / (double(L) * double(L));
  for (std::size_t x = 0; x < n; ++x) {
    const double p = psi(double(x) / double(n));
    const auto xp = Eigen::Index((x + 1) % n);
    M(Eigen::Index(x), xp) += 0.5 * p;
    M(xp, Eigen::Index(x)) += 0.5 * p;
    for (int i = 1; i <= L; ++i) {
      for (int j = 1; j <= L; ++j) {
        M(Eigen::Index((x + std::size_t(i)) % n), Eigen::Index((x + std::size_t(j)) % n)) -= w * p;
      }
    }
  }
  const double tr2 = M.squaredNorm();
  const double diag2 = M.diagonal().squaredNorm();
  return 2.0 * tau2 * tau2 * tr2 + (mu4 - 3.0 * tau2 * tau2) * diag2;
}

double bg_time_integral(const Trajectory& traj, const ModelParams& params, const TestFunction& psi,
                        double eps, double t) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  const int L = static_cast<int>(std::floor(eps * double(n)));
  if (L < 1) throw std::invalid_argument("bg test needs floor(eps n) >= 1");
  const Moments m = moments(params);
  std::vector<double> psi_l(n);
  for (std::size_t x = 0; x < n; ++x) psi_l[x] = psi(double(x) / double(n));
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < traj.times.size() && traj.times[i] <= t; ++i) {
    const auto xi = xi_of(traj.states[i], params.b);
    const double cur = bg_integrand(xi, psi_l, m.rho, m.tau2, L);
    if (i > 0) integral += 0.5 * (prev + cur) * (traj.times[i] - traj.times[i - 1]);
    prev = cur;
  }
  return integral;
}

std::vector<double> bg_time_integrals(const Configuration& initial, const ModelParams& params,
                                      const IntegratorSpec& spec, const TestFunction& psi,
                                      std::span<const double> eps, double t, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  const Moments m = moments(params);
  std::vector<int> L;
  for (double e : eps) {
    L.push_back(static_cast<int>(std::floor(e * double(n))));
    if (L.back() < 1) throw std::invalid_argument("bg test needs floor(eps n) >= 1");
  }
  std::vector<double> psi_l(n);
  for (std::size_t x = 0; x < n; ++x) psi_l[x] = psi(double(x) / double(n));
  LatticeIntegrator integ(initial, params, spec);
  std::vector<double> prev(eps.size()), cur(eps.size()), total(eps.size(), 0.0);
  auto eval = [&](std::vector<double>& out) {
    for (std::size_t e = 0; e < eps.size(); ++e) out[e] = bg_integrand(integ.xi(), psi_l, m.rho, m.tau2, L[e]);
  };
  const auto steps = std::max(1L, static_cast<long>(std::ceil(t / spec.dt * (1.0 - 1e-12))));
  const double h = t / double(steps);
  eval(prev);
  for (long i = 0; i < steps; ++i) {
    integ.advance(h, rng);
    eval(cur);
    for (std::size_t e = 0; e < eps.size(); ++e) total[e] += 0.5 * (prev[e] + cur[e]) * h;
    std::swap(prev, cur);
  }
  return total;
}

BgResult bg_second_order_test(std::span<const Trajectory> ensemble, const ModelParams& params,
                              const TestFunction& psi, double eps, double t) {
  std::vector<double> squares;
  for (const auto& traj : ensemble) {
    const double integral = bg_time_integral(traj, params, psi, eps, t);
    squares.push_back(integral * integral);
  }
  const Estimate e = mean_of(squares);
  return {e.value, e.se, bg_rhs_shape(params, psi, eps, t)};
}

double qv_prediction(const ModelParams& params, const TestFunction& f1, const TestFunction& f2,
                     double T) {
  const Moments m = moments(params);
  const TestFunction g1 = f1.gradient();
  const TestFunction g2 = f2.gradient();
  const double c = (params.a == 2.0 && params.kappa > 1.0) ? 0.0 : cn(params);
  const double cross =
      c == 0.0 ? T * inner(g1, g2) : inner(f1.shifted(c * T) - f1, g2) / c;
  const double scale = 2.0 * params.gamma * std::pow(double(params.n), params.a - 2.0);
  return scale * (m.tau2 * T * norm2(g1) + m.sigma2 * T * norm2(g2) + 2.0 * m.delta * cross);
}

double quadratic_term(const Configuration& initial, const ModelParams& params,
                      const IntegratorSpec& spec, const TestFunction& f, double t, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  const double nd = double(n);
  std::vector<int> modes;
  for (const auto& [z, c] : f.coefficients()) modes.push_back(z);
  const ModeProjector proj(params, modes);
  const double rho = proj.rho();
  const double c = proj.cn();
  const double pref = params.b * params.b * params.theta_n() * params.alpha_n() / (nd * std::sqrt(nd));

  LatticeIntegrator integ(initial, params, spec);
  std::vector<double> gradF;
  auto integrand = [&] {
    const auto F = proj.evaluate_on_lattice(f, frame_offset(c, integ.time()));
    lattice_grad(F, gradF);
    const auto xi = integ.xi();
    double s = 0.0;
    for (std::size_t x = 0; x < n; ++x) s += gradF[x] * (xi[x] - rho) * (xi[(x + 1) % n] - rho);
    return pref * s;
  };
  const auto steps = static_cast<long>(std::ceil(t / spec.dt * (1.0 - 1e-12)));
  const double h = t / double(std::max(1L, steps));
  double prev = integrand();
  double total = 0.0;
  for (long i = 0; i < std::max(1L, steps); ++i) {
    integ.advance(h, rng);
    const double cur = integrand();
    total += 0.5 * (prev + cur) * h;
    prev = cur;
  }
  return total;
}

ScalingResult h_minus_one_scaling(const ModelParams& base, std::span<const int> sizes,
                                  const TestFunction& f, double t, std::size_t replicas,
                                  std::uint64_t seed, int workers) {
  if (sizes.size() < 3) throw std::invalid_argument("scaling needs at least 3 lattice sizes");
  ScalingResult out;
  std::vector<double> xs, ys, ses;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    ModelParams p = base;
    p.n = sizes[k];
    p.validate();
    const IntegratorSpec spec = IntegratorSpec::defaults(p);
    const auto values = run_replicas<double>(replicas, workers, [&](std::size_t r) {
      Rng rng(seed + 7919 * std::uint64_t(k + 1), r);
      Configuration init;
      sample_gibbs_into(p, rng, init);
      return quadratic_term(init, p, spec, f, t, rng);
    });
    const Estimate var = variance_of(values);
    out.points.push_back({p.n, var});
    xs.push_back(std::log(double(p.n)));
    ys.push_back(std::log(var.value));
    ses.push_back(var.se / var.value);  // delta method
  }
  out.fit = fit_scaling(xs, ys, ses);
  return out;
}

CovarianceReport covariance_vs_ou(std::span<const FieldSample> samples_s,
                                  std::span<const FieldSample> samples_t, const OUParams& p,
                                  std::span<const int> modes) {
  if (samples_s.size() != samples_t.size()) throw std::invalid_argument("covariance_vs_ou: replica mismatch");
  if (samples_s.size() < 2) throw std::invalid_argument("covariance_vs_ou: insufficient replicas");
  CovarianceReport rep;
  const std::size_t R = samples_s.size();
  const char* names[2] = {"Y", "V"};
  for (int z : modes) {
    double lag = samples_t[0].t - samples_s[0].t;
    const Eigen::MatrixXd pred = ou_mode_covariance(p, std::abs(z), lag);
    for (int i = 0; i < int(p.A.rows()); ++i) {
      for (int j = 0; j < int(p.A.rows()); ++j) {
        std::vector<double> xt(R), xs(R);
        for (std::size_t r = 0; r < R; ++r) {
          xt[r] = i == 0 ? samples_t[r].y.at(z) : samples_t[r].v.at(z);
          xs[r] = j == 0 ? samples_s[r].y.at(z) : samples_s[r].v.at(z);
        }
        const std::string q = "E[" + std::string(names[i]) + "_t(h_" + std::to_string(z) + ") " +
                              names[j] + "_s(h_" + std::to_string(z) + ")], t-s=" +
                              std::to_string(lag);
        Report r = compare_se(q, product_mean_of(xt, xs), pred(i, j));
        if (r.z_score) rep.max_abs_z = std::max(rep.max_abs_z, std::abs(*r.z_score));
        rep.entries.push_back(std::move(r));
      }
    }
  }
  return rep;
}

}  // namespace fluctlab
