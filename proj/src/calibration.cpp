#include "vibronic_td/calibration.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include "json.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vibronic_td/dynamics.hpp"
#include "vibronic_td/parallel.hpp"

namespace vibronic_td {

namespace {

constexpr double kPi = std::numbers::pi;

Matrix sigma_plus_matrix(const HilbertSpec& spec) { return qudit_projector(spec, 1, 0).matrix(); }

void require_qubit_mode(const HilbertSpec& spec) {
  if (spec.qudit_dim != 2 || spec.num_modes() != 1 || spec.has_reference) {
    throw DomainError("laser Hamiltonians need a qubit and one mode");
  }
}

// H_SB(t) = A e^{i delta t} + A^+ e^{-i delta t} with
// A = Omega_S (sigma_+ e^{i phi_S} + h.c.) a^+ e^{i phi_M}.
struct Bichromatic {
  Matrix A;
  double delta;
  Matrix at(double t) const {
    const cplx ph = std::exp(kI * (delta * t));
    Matrix h = ph * A;
    h += std::conj(ph) * A.adjoint();
    return h;
  }
};

Bichromatic make_bichromatic(const HilbertSpec& spec, double omega_s, double phi_S, double phi_M, double delta) {
  Matrix sp = sigma_plus_matrix(spec);
  Matrix spin = sp * std::exp(kI * phi_S);
  spin += sp.adjoint() * std::exp(-kI * phi_S);
  Matrix ad = build_ladder(spec, 0).matrix().adjoint();
  return {omega_s * spin * ad * std::exp(kI * phi_M), delta};
}

// Ideal carrier pulse exp(-i theta/2 (sigma_+ e^{i phi} + h.c.)).
Matrix carrier_pulse(const HilbertSpec& spec, double theta, double phi) {
  Eigen::Matrix2cd gen;
  gen << 0, std::exp(-kI * phi), std::exp(kI * phi), 0;
  Eigen::Matrix2cd u = std::cos(theta / 2) * Eigen::Matrix2cd::Identity() - kI * std::sin(theta / 2) * gen;
  return embed_qudit_operator(spec, Matrix(u)).matrix();
}

double population_1(const Vector& psi, Index md) { return psi.segment(md, md).squaredNorm(); }

double rk4_step_for(const LaserParams& p) { return calibration_step(p); }

std::mt19937_64 point_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 7u};
  return std::mt19937_64(seq);
}

double poisson_weight(int k, double mean) {
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

std::vector<double> sideband_population(const std::vector<double>& t_grid, double Omega, double eta, double mean,
                                        double zeta, int k_max) {
  if (k_max < 1) throw DomainError("k_max must be >= 1");
  const int needed = bsb_k_max(mean, 1e-10);
  if (k_max < needed) {
    std::ostringstream os;
    os << "k_max=" << k_max << " leaves Poisson tail above 1e-10 for mean " << mean << "; use k_max >= " << needed;
    throw TruncationError(os.str(), needed);
  }
  std::vector<double> rabi(k_max), w(k_max);
  for (int k = 0; k < k_max; ++k) {
    rabi[k] = bsb_rabi_frequency(k, Omega, eta);
    w[k] = poisson_weight(k, mean);
  }
  std::vector<double> out(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    double acc = 0.0;
    for (int k = 0; k < k_max; ++k) acc += w[k] * std::cos(rabi[k] * t);
    out[i] = 0.5 * (1.0 - std::exp(-zeta * t) * acc);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

LaserParams LaserParams::standard() {
  LaserParams p;
  p.eta = 0.084;
  p.Omega = 2.0 * (2.0 * kPi * 0.850e3) / p.eta;
  return p;
}

void LaserParams::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("Lamb-Dicke parameter must be in (0, 1)");
  if (!(Omega >= 0.0) || !std::isfinite(Omega)) throw DomainError("Omega must be >= 0");
  if (!std::isfinite(phi_C) || !std::isfinite(phi_R) || !std::isfinite(phi_B) || !std::isfinite(delta)) {
    throw DomainError("laser phases and detuning must be finite");
  }
}

InteractionHamiltonians build_interaction_hamiltonians(const LaserParams& p, const HilbertSpec& spec) {
  p.validate();
  require_qubit_mode(spec);
  InteractionHamiltonians h;
  h.spec = spec;
  const Matrix sp = sigma_plus_matrix(spec);
  const Matrix a = build_ladder(spec, 0).matrix();
  const Matrix ad = a.adjoint();
  const double half = p.Omega / 2.0;
  const double side = p.eta * p.Omega / 2.0;
  const Matrix carrier_m = half * (sp * std::exp(kI * p.phi_C) + sp.adjoint() * std::exp(-kI * p.phi_C));
  h.carrier = [carrier_m](double) { return carrier_m; };
  const Matrix red_op = side * sp * a;
  const Matrix blue_op = side * sp * ad;
  const double delta = p.delta;
  const double phi_R = p.phi_R;
  const double phi_B = p.phi_B;
  h.red = [red_op, delta, phi_R](double t) {
    Matrix m = red_op * std::exp(-kI * (delta * t - phi_R));
    Matrix out = m + m.adjoint();
    return out;
  };
  h.blue = [blue_op, delta, phi_B](double t) {
    Matrix m = blue_op * std::exp(kI * (delta * t + phi_B));
    Matrix out = m + m.adjoint();
    return out;
  };
  Bichromatic sb = make_bichromatic(spec, p.omega_s(), p.phi_S(), p.phi_M(), p.delta);
  h.bichromatic = [sb](double t) { return sb.at(t); };
  return h;
}

double calibration_step(const LaserParams& p) {
  const double scale = std::max(std::abs(p.delta), p.Omega);
  return scale > 0.0 ? 1.0 / (100.0 * scale) : 1e-6;
}

std::vector<ScanPoint> detuning_scan(const LaserParams& p, const std::vector<double>& offsets, double pulse_time,
                                     const ScanOptions& opts) {
  p.validate();
  if (!(pulse_time > 0.0)) throw DomainError("pulse_time must be > 0");
  const HilbertSpec spec(2, {opts.n_max});
  const Index md = spec.mode_dim();
  const Matrix first = carrier_pulse(spec, kPi / 2, 0.0);
  const Matrix last = carrier_pulse(spec, kPi / 2, kPi);
  std::vector<ScanPoint> out(offsets.size());
  parallel_for(offsets.size(), opts.workers, [&](std::size_t i) {
    LaserParams q = p;
    q.delta = offsets[i];
    const double step = rk4_step_for(q);
    Bichromatic sb1 = make_bichromatic(spec, q.omega_s(), q.phi_S(), q.phi_M(), q.delta);
    Bichromatic sb2 = make_bichromatic(spec, q.omega_s(), q.phi_S(), q.phi_M() + kPi, q.delta);
    Vector psi = Vector::Zero(spec.dim());
    psi(0) = 1.0;
    psi = first * psi;
    psi = integrate_schrodinger([&](double t) { return sb1.at(t); }, psi, 0.0, pulse_time, step);
    psi = integrate_schrodinger([&](double t) { return sb2.at(t); }, psi, pulse_time, 2.0 * pulse_time, step);
    psi = last * psi;
    out[i] = {offsets[i], population_1(psi, md) / psi.squaredNorm(), 0.0};
  });
  return out;
}

std::vector<ScanPoint> phase_scan(const LaserParams& p, const std::vector<double>& phases, double pulse_time,
                                  const ScanOptions& opts) {
  p.validate();
  if (!(pulse_time > 0.0)) throw DomainError("pulse_time must be > 0");
  const HilbertSpec spec(2, {opts.n_max});
  const Index md = spec.mode_dim();
  const Matrix first = carrier_pulse(spec, kPi / 2, 0.0);
  const Matrix last = carrier_pulse(spec, kPi / 2, kPi);
  std::vector<ScanPoint> out(phases.size());
  parallel_for(phases.size(), opts.workers, [&](std::size_t i) {
    LaserParams q = p;
    q.phi_R = phases[i];
    q.phi_B = phases[i];
    const double step = rk4_step_for(q);
    Bichromatic sb = make_bichromatic(spec, q.omega_s(), q.phi_S(), q.phi_M(), q.delta);
    Vector psi = Vector::Zero(spec.dim());
    psi(0) = 1.0;
    psi = first * psi;
    psi = integrate_schrodinger([&](double t) { return sb.at(t); }, psi, 0.0, pulse_time, step);
    psi = last * psi;
    out[i] = {phases[i], population_1(psi, md) / psi.squaredNorm(), 0.0};
  });
  return out;
}

double sdf_spin_purity(const LaserParams& p, double phi_S, double pulse_time, const ScanOptions& opts) {
  p.validate();
  const HilbertSpec spec(2, {opts.n_max});
  const Index md = spec.mode_dim();
  LaserParams q = p;
  q.phi_R = phi_S;
  q.phi_B = phi_S;
  Bichromatic sb = make_bichromatic(spec, q.omega_s(), q.phi_S(), q.phi_M(), q.delta);
  Vector psi = Vector::Zero(spec.dim());
  psi(0) = 1.0;
  psi = carrier_pulse(spec, kPi / 2, 0.0) * psi;
  psi = integrate_schrodinger([&](double t) { return sb.at(t); }, psi, 0.0, pulse_time, calibration_step(q));
  psi /= psi.norm();
  Eigen::Matrix2cd rho;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) rho(r, c) = psi.segment(c * md, md).dot(psi.segment(r * md, md));
  }
  return (rho * rho).trace().real();
}

double laguerre_l1(int k, double x) {
  if (k < 0) throw DomainError("Laguerre order must be >= 0");
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = 2.0 - x;
  for (int n = 1; n < k; ++n) {
    const double next = ((2.0 * n + 2.0 - x) * cur - (n + 1.0) * prev) / (n + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double bsb_rabi_frequency(int k, double Omega, double eta) {
  return std::exp(-eta * eta / 2.0) * eta * Omega * laguerre_l1(k, eta * eta) / std::sqrt(k + 1.0);
}

int bsb_k_max(double mean, double tail) {
  if (mean <= 0.0) return 1;
  return std::max(1, poisson_cutoff(mean, tail));
}

std::vector<double> bsb_population(const std::vector<double>& t_grid, double Omega, double eta, double nbar,
                                   double zeta, int k_max) {
  if (!(nbar >= 0.0)) throw DomainError("nbar must be >= 0");
  if (!(zeta >= 0.0)) throw DomainError("zeta must be >= 0");
  return sideband_population(t_grid, Omega, eta, nbar, zeta, k_max);
}

std::vector<double> coherent_bsb_population(const std::vector<double>& t_grid, double Omega, double eta,
                                            double beta_abs, double zeta, int k_max) {
  if (!(zeta >= 0.0)) throw DomainError("zeta must be >= 0");
  return sideband_population(t_grid, Omega, eta, beta_abs * beta_abs, zeta, k_max);
}

std::vector<double> simulate_bsb_population(const LaserParams& p, double beta_abs, const std::vector<double>& t_grid,
                                            int n_max) {
  p.validate();
  const HilbertSpec spec(2, {n_max});
  const Index md = spec.mode_dim();
  InteractionHamiltonians h = build_interaction_hamiltonians(p, spec);
  Vector psi = displacement_operator(spec, 0, cplx(beta_abs, 0.0)).matrix().col(0);
  std::vector<double> out(t_grid.size());
  double t = 0.0;
  const double step = calibration_step(p);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < t) throw DomainError("time grid must be increasing");
    psi = integrate_schrodinger(h.blue, psi, t, t_grid[i], step);
    t = t_grid[i];
    out[i] = population_1(psi, md) / psi.squaredNorm();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct GenericFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  int n_inputs;
  int n_values;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> residual;

  int inputs() const { return n_inputs; }
  int values() const { return n_values; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    residual(x, fvec);
    return 0;
  }
  // Central differences; the step has a floor so parameters sitting at 0 keep a column.
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
    Eigen::VectorXd xp = x, fp(n_values), fm(n_values);
    for (Index j = 0; j < x.size(); ++j) {
      const double h = 1e-7 * std::max(std::abs(x(j)), 1.0);
      xp(j) = x(j) + h;
      residual(xp, fp);
      xp(j) = x(j) - h;
      residual(xp, fm);
      xp(j) = x(j);
      jac.col(j) = (fp - fm) / (2.0 * h);
    }
    return 0;
  }
};

std::string status_name(Eigen::LevenbergMarquardtSpace::Status s) {
  using namespace Eigen::LevenbergMarquardtSpace;
  switch (s) {
    case ImproperInputParameters: return "improper input parameters";
    case RelativeReductionTooSmall: return "relative reduction below ftol";
    case RelativeErrorTooSmall: return "relative step below xtol";
    case RelativeErrorAndReductionTooSmall: return "relative step and reduction below tolerances";
    case CosinusTooSmall: return "gradient orthogonal to residual";
    case TooManyFunctionEvaluation: return "too many function evaluations";
    case FtolTooSmall: return "ftol too small";
    case XtolTooSmall: return "xtol too small";
    case GtolTooSmall: return "gtol too small";
    default: return "running";
  }
}

FitResult run_lm(const std::vector<std::string>& names, Eigen::VectorXd x, int n_values,
                 const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residual) {
  GenericFunctor f{static_cast<int>(x.size()), n_values, residual};
  Eigen::LevenbergMarquardt<GenericFunctor> lm(f);
  lm.parameters.xtol = 1e-8;
  lm.parameters.ftol = 1e-15;
  lm.parameters.gtol = 0.0;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(x);

  FitResult r;
  r.names = names;
  for (std::size_t k = 0; k < names.size(); ++k) r.params[names[k]] = x(static_cast<Index>(k));
  Eigen::VectorXd fvec(n_values);
  residual(x, fvec);
  r.residual_norm = fvec.norm();
  r.iterations = static_cast<int>(lm.iter);
  r.status = status_name(status);
  using namespace Eigen::LevenbergMarquardtSpace;
  r.converged = status == RelativeErrorTooSmall || status == RelativeErrorAndReductionTooSmall ||
                (status == RelativeReductionTooSmall && r.residual_norm < 1e-12) ||
                (status == XtolTooSmall);
  Eigen::MatrixXd J(n_values, x.size());
  f.df(x, J);
  const int dof = std::max(1, n_values - static_cast<int>(x.size()));
  const double s2 = fvec.squaredNorm() / dof;
  Eigen::MatrixXd jtj = J.transpose() * J;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
  if (cod.rank() < jtj.rows()) {
    r.covariance = Eigen::MatrixXd::Constant(x.size(), x.size(), std::numeric_limits<double>::infinity());
    r.converged = false;
  } else {
    r.covariance = s2 * cod.pseudoInverse();
    r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
  }
  for (Index k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x(k))) r.converged = false;
  }
  return r;
}

}  // namespace

std::string FitResult::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json pj = nlohmann::ordered_json::object();
  for (const auto& n : names) pj[n] = params.at(n);
  j["params"] = pj;
  nlohmann::ordered_json cov = nlohmann::ordered_json::array();
  for (Index r = 0; r < covariance.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Index c = 0; c < covariance.cols(); ++c) {
      const double v = covariance(r, c);
      if (std::isfinite(v)) {
        row.push_back(v);
      } else {
        row.push_back(nullptr);
      }
    }
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["residual_norm"] = residual_norm;
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["status"] = status;
  return j.dump(2);
}

FitResult fit_displacement(const std::vector<std::pair<double, double>>& scan, const LaserParams& p) {
  p.validate();
  if (scan.size() < 10) throw DomainError("displacement fit needs at least 10 samples");
  std::vector<double> t(scan.size()), y(scan.size());
  for (std::size_t k = 0; k < scan.size(); ++k) {
    t[k] = scan[k].first;
    y[k] = scan[k].second;
  }
  const int n = static_cast<int>(scan.size());
  auto model = [&](double beta, double zeta) {
    const double b = std::abs(beta);
    return coherent_bsb_population(t, p.Omega, p.eta, b, std::max(0.0, zeta), bsb_k_max(b * b, 1e-12) + 2);
  };
  auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
    std::vector<double> m = model(x(0), x(1));
    for (int k = 0; k < n; ++k) f(k) = m[k] - y[k];
    // Keep zeta >= 0 with a soft wall.
    if (x(1) < 0.0) f(0) += 1e3 * x(1);
  };
  // Coarse start on |beta| at zeta = 0.
  double best_beta = 0.1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 60; ++k) {
    const double b = 0.05 * k;
    std::vector<double> m = model(b, 0.0);
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost += (m[i] - y[i]) * (m[i] - y[i]);
    if (cost < best_cost) {
      best_cost = cost;
      best_beta = b;
    }
  }
  Eigen::VectorXd x(2);
  x << std::max(best_beta, 1e-3), 0.0;
  FitResult r = run_lm({"beta", "zeta"}, x, n, residual);
  r.params["beta"] = std::abs(r.params["beta"]);
  return r;
}

FitResult fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 5) throw DomainError("sinusoid fit needs >= 5 matching samples");
  const int n = static_cast<int>(x.size());
  const double span = x.back() - x.front();
  if (!(span > 0.0)) throw DomainError("sinusoid fit needs increasing x");
  // Linear least squares over a period grid for the start point.
  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best(4);
  for (int k = 1; k <= 400; ++k) {
    const double period = span * 4.0 * k / 400.0;
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      const double ph = 2.0 * kPi * x[i] / period;
      A(i, 0) = 1.0;
      A(i, 1) = std::cos(ph);
      A(i, 2) = std::sin(ph);
      b(i) = y[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    const double cost = (A * c - b).squaredNorm();
    if (cost < best_cost - 1e-15) {
      best_cost = cost;
      best << c(0), std::hypot(c(1), c(2)), period, std::atan2(c(2), c(1));
    }
  }
  auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& f) {
    for (int i = 0; i < n; ++i) f(i) = p(0) + p(1) * std::cos(2.0 * kPi * x[i] / p(2) - p(3)) - y[i];
  };
  return run_lm({"offset", "amplitude", "period", "phase"}, best, n, residual);
}

std::vector<ScanPoint> sample_scan(const std::vector<ScanPoint>& exact, int shots, std::uint64_t seed) {
  if (shots < 1) throw DomainError("shots must be >= 1");
  std::vector<ScanPoint> out(exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) {
    std::mt19937_64 rng = point_rng(seed, i);
    std::binomial_distribution<int> dist(shots, std::clamp(exact[i].p1, 0.0, 1.0));
    const double p = static_cast<double>(dist(rng)) / shots;
    out[i] = {exact[i].x, p, std::sqrt(std::max(p * (1.0 - p), 0.0) / shots)};
  }
  return out;
}

}  // namespace vibronic_td
