#include "fluctlab/fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fluctlab/io.hpp"

namespace fluctlab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

double unit_interval(double u) { return u - std::floor(u); }
}  // namespace

double h_basis(int z, double u) {
  if (z == 0) return 1.0;
  const double arg = kTwoPi * z * u;
  return z > 0 ? kSqrt2 * std::cos(arg) : kSqrt2 * std::sin(arg);
}

double gamma_z(int z) { return 1.0 + kTwoPi * kTwoPi * double(z) * double(z); }

TestFunction::TestFunction(std::map<int, double> coefficients) : coeffs_(std::move(coefficients)) {}

TestFunction TestFunction::mode(int z) { return TestFunction({{z, 1.0}}); }

double TestFunction::coefficient(int z) const {
  auto it = coeffs_.find(z);
  return it == coeffs_.end() ? 0.0 : it->second;
}

bool TestFunction::is_zero() const {
  for (const auto& [z, c] : coeffs_) {
    if (c != 0.0) return false;
  }
  return true;
}

double TestFunction::operator()(double u) const {
  double s = 0.0;
  for (const auto& [z, c] : coeffs_) s += c * h_basis(z, u);
  return s;
}

double TestFunction::derivative(double u) const { return gradient()(u); }

// With k = 2 pi m, m > 0: h_m' = k h_{-m} and h_{-m}' = -k h_m.
TestFunction TestFunction::gradient() const {
  std::map<int, double> out;
  for (const auto& [z, c] : coeffs_) {
    if (z == 0) continue;
    const double k = kTwoPi * std::abs(z);
    out[-z] += (z > 0 ? k : -k) * c;
  }
  return TestFunction(std::move(out));
}

TestFunction TestFunction::laplacian() const {
  std::map<int, double> out;
  for (const auto& [z, c] : coeffs_) {
    if (z == 0) continue;
    const double k = kTwoPi * z;
    out[z] = -k * k * c;
  }
  return TestFunction(std::move(out));
}

TestFunction TestFunction::shifted(double c) const {
  std::map<int, double> out;
  for (const auto& [z, coef] : coeffs_) {
    if (z == 0) {
      out[0] += coef;
      continue;
    }
    const int m = std::abs(z);
    const double phi = kTwoPi * m * unit_interval(c);
    const double cs = std::cos(phi);
    const double sn = std::sin(phi);
    if (z > 0) {
      out[m] += coef * cs;
      out[-m] += coef * sn;
    } else {
      out[m] += -coef * sn;
      out[-m] += coef * cs;
    }
  }
  return TestFunction(std::move(out));
}

TestFunction operator+(const TestFunction& f, const TestFunction& g) {
  auto out = f.coeffs_;
  for (const auto& [z, c] : g.coeffs_) out[z] += c;
  return TestFunction(std::move(out));
}

TestFunction operator-(const TestFunction& f, const TestFunction& g) { return f + (-1.0) * g; }

TestFunction operator*(double s, const TestFunction& f) {
  auto out = f.coeffs_;
  for (auto& [z, c] : out) c *= s;
  return TestFunction(std::move(out));
}

double inner(const TestFunction& f, const TestFunction& g) {
  double s = 0.0;
  for (const auto& [z, c] : f.coefficients()) s += c * g.coefficient(z);
  return s;
}

double frame_velocity(const ModelParams& params) {
  const double rho = moments(params).rho;
  return 2.0 * params.b * params.b * rho * params.alpha;
}

double cn(const ModelParams& params) {
  return frame_velocity(params) *
         std::pow(static_cast<double>(params.n), params.a - params.kappa - 1.0);
}

double frame_offset(double c, double t) {
  const double p = c * t;
  const double err = std::fma(c, t, -p);
  double r = (p - std::floor(p)) + err;
  r -= std::floor(r);
  return r >= 1.0 ? 0.0 : r;
}

double field_Y(const Configuration& config, double t, const TestFunction& f,
               const ModelParams& params) {
  const double rho = moments(params).rho;
  const double off = frame_offset(cn(params), t);
  const std::size_t n = config.size();
  double s = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double u = unit_interval(double(x) / double(n) + off);
    s += f(u) * (std::exp(-params.b * config[x]) - rho);
  }
  return s / std::sqrt(double(n));
}

double field_V(const Configuration& config, double /*t*/, const TestFunction& f,
               const ModelParams& params) {
  const double v = moments(params).v;
  const std::size_t n = config.size();
  double s = 0.0;
  for (std::size_t x = 0; x < n; ++x) s += f(double(x) / double(n)) * (config[x] - v);
  return s / std::sqrt(double(n));
}

double h_minus_k_norm(const std::map<int, std::pair<double, double>>& values, int k) {
  double s = 0.0;
  for (const auto& [z, val] : values) {
    s += (val.first * val.first + val.second * val.second) * std::pow(gamma_z(z), -double(k));
  }
  return s;
}

double box_average(const Configuration& config, std::size_t x, double eps,
                   const ModelParams& params) {
  const std::size_t n = config.size();
  const auto len = static_cast<std::size_t>(std::floor(eps * double(n)));
  if (len < 1) throw std::invalid_argument("box average needs floor(eps n) >= 1");
  const double rho = moments(params).rho;
  double s = 0.0;
  for (std::size_t j = 1; j <= len; ++j) s += std::exp(-params.b * config[(x + j) % n]) - rho;
  return s / double(len);
}

FieldSample sample_fields(const Configuration& config, double t, std::span<const int> modes,
                          const ModelParams& params) {
  FieldSample out;
  out.t = t;
  out.frame_offset = frame_offset(cn(params), t);
  for (int z : modes) {
    const auto f = TestFunction::mode(z);
    out.y[z] = field_Y(config, t, f, params);
    out.v[z] = field_V(config, t, f, params);
  }
  return out;
}

void write_field_csv(std::ostream& out, std::span<const FieldSample> samples) {
  out << "t,z,Y,V\n";
  for (const auto& s : samples) {
    for (const auto& [z, y] : s.y) {
      auto it = s.v.find(z);
      const double v = it == s.v.end() ? 0.0 : it->second;
      out << format_double(s.t) << ',' << z << ',' << format_double(y) << ','
          << format_double(v) << '\n';
    }
  }
}

ModeProjector::ModeProjector(const ModelParams& params, std::vector<int> modes)
    : n_(params.n), b_(params.b), mom_(fluctlab::moments(params)), cn_(fluctlab::cn(params)) {
  for (int z : modes) {
    if (!index_.count(z)) {
      index_[z] = int(modes_.size());
      modes_.push_back(z);
    }
  }
  for (int z : modes) {
    if (!index_.count(-z)) {
      index_[-z] = int(modes_.size());
      modes_.push_back(-z);
    }
  }
  const std::size_t n = static_cast<std::size_t>(n_);
  table_.resize(modes_.size() * n);
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    for (std::size_t x = 0; x < n; ++x) {
      table_[m * n + x] = h_basis(modes_[m], double(x) / double(n));
    }
  }
}

int ModeProjector::mode_index(int z) const {
  auto it = index_.find(z);
  return it == index_.end() ? -1 : it->second;
}

std::vector<double> ModeProjector::lattice_sums(std::span<const double> w) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  std::vector<double> out(modes_.size(), 0.0);
  const double norm = 1.0 / std::sqrt(double(n));
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const double* row = &table_[m * n];
    double s = 0.0;
    for (std::size_t x = 0; x < n; ++x) s += row[x] * w[x];
    out[m] = s * norm;
  }
  return out;
}

std::vector<double> ModeProjector::project_Y(std::span<const double> xi, double t) const {
  std::vector<double> centered(xi.begin(), xi.end());
  for (double& c : centered) c -= mom_.rho;
  const auto sums = lattice_sums(centered);
  const double off = frame_offset(cn_, t);
  std::vector<double> out(modes_.size());
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const int z = modes_[m];
    if (z == 0) {
      out[m] = sums[m];
      continue;
    }
    const double phi = kTwoPi * std::abs(z) * off;
    const double cs = std::cos(phi);
    const double sn = std::sin(phi);
    const double sp = sums[std::size_t(index_.at(std::abs(z)))];
    const double sm = sums[std::size_t(index_.at(-std::abs(z)))];
    out[m] = z > 0 ? cs * sp + sn * sm : cs * sm - sn * sp;
  }
  return out;
}

std::vector<double> ModeProjector::project_V(std::span<const double> xi) const {
  std::vector<double> centered(xi.size());
  for (std::size_t x = 0; x < xi.size(); ++x) centered[x] = -std::log(xi[x]) / b_ - mom_.v;
  return lattice_sums(centered);
}

std::vector<double> ModeProjector::evaluate_on_lattice(const TestFunction& f,
                                                       double offset) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  const auto g = f.shifted(offset);
  std::vector<double> out(n, 0.0);
  for (const auto& [z, c] : g.coefficients()) {
    if (c == 0.0) continue;
    const int m = mode_index(z);
    if (m >= 0) {
      const double* row = &table_[std::size_t(m) * n];
      for (std::size_t x = 0; x < n; ++x) out[x] += c * row[x];
    } else {
      for (std::size_t x = 0; x < n; ++x) out[x] += c * h_basis(z, double(x) / double(n));
    }
  }
  return out;
}

}  // namespace fluctlab
