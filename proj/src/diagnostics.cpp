#include "chemotaxis_lab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chemotaxis_lab {

namespace {

using Values = Fieldd::Values;

constexpr double kGuardFraction = 1e-12;
constexpr double kLogUnderflow = 1e-300;

Values x_log_x(const Values& x) {
  return x.unaryExpr([](double s) { return s < kLogUnderflow ? 0.0 : s * std::log(s); });
}

// int |grad f|^2 / f with f floored at `floor`
double fisher_information(const Fieldd& f, double floor) {
  return integrate(f.grid(), grad_squared(f) / f.values().max(floor));
}

double population_floor(double mean0) { return kGuardFraction * std::max(mean0, 1e-300); }

Values safe_w(const State& s) { return s.w.values().max(w_guard(s)); }

// int w |D^2 ln w|^2
double log_hessian_energy(const State& s) {
  const Values w = safe_w(s);
  const Fieldd log_w(s.grid(), w.log());
  return integrate(s.grid(), w * hessian_entries(log_w).frobenius_squared());
}

Values consumption_coefficient(const State& s, const Params& p, const Regularizationd& reg) {
  return p.alpha * reg.value(s.u.values()) + p.beta * reg.value(s.v.values());
}

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> columns = {
      "t",           "dt_used",       "mass_u",          "mass_v",          "w_norm_1",       "w_norm_2",
      "w_norm_4",    "w_norm_inf",    "entropy_E",       "dissipation_D",   "identity_residual",
      "hessian_log_lhs", "hessian_log_rhs", "compound_2d", "conv_u",         "conv_v",          "conv_w",
      "dist_mean_q_u", "dist_mean_q_v", "weighted_lp_y", "cumulative_consumption", "min_u", "min_v", "min_w"};
  return columns;
}

std::vector<double> record_values(const DiagnosticsRecord& r) {
  return {r.t,          r.dt_used,     r.mass_u,          r.mass_v,          r.w_norm_1,
          r.w_norm_2,   r.w_norm_4,    r.w_norm_inf,      r.entropy,         r.dissipation,
          r.identity_residual, r.hessian_log_lhs, r.hessian_log_rhs, r.compound_2d, r.conv_u,
          r.conv_v,     r.conv_w,      r.dist_mean_q_u,   r.dist_mean_q_v,   r.weighted_lp_y,
          r.cumulative_consumption, r.min_u, r.min_v, r.min_w};
}

double w_guard(const State& s) { return kGuardFraction * std::max(s.w0_max, 1e-300); }

double entropy(const State& s, const Params& p) {
  const Gridd& g = s.grid();
  const double u_term = integrate(g, x_log_x(s.u.values()));
  const double v_term = integrate(g, x_log_x(s.v.values()));
  const double w_term = integrate(g, grad_squared(s.w) / safe_w(s));
  return p.alpha * p.chi2 * u_term + p.beta * p.chi1 * v_term + 0.5 * p.chi1 * p.chi2 * w_term;
}

namespace {

struct DissipationParts {
  double fisher_u;
  double fisher_v;
  double log_hessian;
  double consumption;
};

DissipationParts dissipation_parts(const State& s, const Params& p, const Regularizationd& reg) {
  return {fisher_information(s.u, population_floor(s.mean_u0)), fisher_information(s.v, population_floor(s.mean_v0)),
          log_hessian_energy(s),
          integrate(s.grid(), consumption_coefficient(s, p, reg) * grad_squared(s.w) / safe_w(s))};
}

double half_weighted(const DissipationParts& d, const Params& p) {
  const double chi12 = p.chi1 * p.chi2;
  return 0.5 * p.alpha * p.chi2 * d.fisher_u + 0.5 * p.beta * p.chi1 * d.fisher_v + 0.5 * chi12 * d.log_hessian +
         0.5 * chi12 * d.consumption;
}

double full_weighted(const DissipationParts& d, const Params& p) {
  const double chi12 = p.chi1 * p.chi2;
  return p.alpha * p.chi2 * d.fisher_u + p.beta * p.chi1 * d.fisher_v + chi12 * d.log_hessian +
         0.5 * chi12 * d.consumption;
}

}  // namespace

double dissipation(const State& s, const Params& p, const Regularizationd& reg) {
  return half_weighted(dissipation_parts(s, p, reg), p);
}

double entropy_production(const State& s, const Params& p, const Regularizationd& reg) {
  return full_weighted(dissipation_parts(s, p, reg), p);
}

double identity_residual(std::span<const State> window, const Params& p, const Regularizationd& reg) {
  detail::require(window.size() >= 2, "identity_residual needs at least two snapshots");
  double worst = -std::numeric_limits<double>::infinity();
  double e_prev = entropy(window[0], p);
  for (std::size_t k = 0; k + 1 < window.size(); ++k) {
    const double dt = window[k + 1].t - window[k].t;
    detail::require(dt > 0, "snapshots must be strictly increasing in time");
    const double e_next = entropy(window[k + 1], p);
    worst = std::max(worst, (e_next - e_prev) / dt + entropy_production(window[k], p, reg));
    e_prev = e_next;
  }
  return worst;
}

HessianLogCheck hessian_log_check(const State& s) {
  const Gridd& g = s.grid();
  const Values w = safe_w(s);
  const double lhs = integrate(g, grad_squared(s.w).square() / w.cube());
  const double n = g.dim();
  const double factor = (2.0 + std::sqrt(n)) * (2.0 + std::sqrt(n));
  return {lhs, factor * log_hessian_energy(s)};
}

double compound_2d(const State& s) {
  return integrate(s.grid(), s.u.values().square() + s.v.values().square() + grad_squared(s.w).square());
}

double consumption_rate(const State& s, const Params& p, const Regularizationd& reg) {
  return integrate(s.grid(), consumption_coefficient(s, p, reg) * s.w.values());
}

double consumption_budget(std::span<const State> traj, const Params& p, const Regularizationd& reg) {
  double total = 0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k)
    total += 0.5 * (traj[k + 1].t - traj[k].t) * (consumption_rate(traj[k], p, reg) + consumption_rate(traj[k + 1], p, reg));
  return total;
}

ConvergenceMetrics convergence_metrics(const State& s) {
  return {(s.u.values() - s.mean_u0).abs().maxCoeff(), (s.v.values() - s.mean_v0).abs().maxCoeff(),
          s.w.values().abs().maxCoeff()};
}

std::pair<double, double> dist_mean_lq(const State& s, int n_for_exponent) {
  detail::require(n_for_exponent >= 2, "dist_mean_lq needs n >= 2");
  const double q = double(n_for_exponent) / double(n_for_exponent - 1);
  const Gridd& g = s.grid();
  return {lp_norm(g, s.u.values() - s.mean_u0, q), lp_norm(g, s.v.values() - s.mean_v0, q)};
}

WeightedLpSpec delta_of(double p, double r, const Params& params) {
  detail::require(p > 1, "weighted L^p needs p > 1");
  detail::require(r > 0 && r < p - 1, "weighted L^p needs 0 < r < p - 1");
  const double inv_chi = std::min({1.0, params.chi1 > 0 ? 1.0 / params.chi1 : 1.0,
                                   params.chi2 > 0 ? 1.0 / params.chi2 : 1.0});
  WeightedLpSpec spec;
  spec.p = p;
  spec.r = r;
  spec.delta = inv_chi * (p - 1 - r) * r / (2 * p * p * p);
  auto coercivity = [&](double chi) {
    const double two_delta = 2 * spec.delta;
    const double num = 4 * r * r + (p - 1) * (p - 1) * (two_delta * chi) * (two_delta * chi);
    const double den = r + 1 - two_delta * p * chi;
    return p * std::pow(two_delta, -r) * (p - 1 - p / (4 * r) * num / den);
  };
  spec.a1 = coercivity(params.chi1);
  spec.a2 = coercivity(params.chi2);
  if (!(spec.delta > 0 && spec.delta <= inv_chi * (r + 1) / (2 * p)))
    throw std::logic_error("delta violates its defining bounds");
  if (!(spec.a1 > 0 && spec.a2 > 0)) throw std::logic_error("coercivity constants A_1, A_2 must be positive");
  return spec;
}

double weighted_lp_value(const State& s, const WeightedLpSpec& spec) {
  if (!(s.w.values().maxCoeff() < spec.delta))
    throw std::domain_error("weighted L^p functional evaluated before max(w) < delta");
  const Values weight = (2 * spec.delta - s.w.values()).pow(-spec.r);
  return integrate(s.grid(), (s.u.values().pow(spec.p) + s.v.values().pow(spec.p)) * weight);
}

std::vector<double> weighted_lp(std::span<const State> tail, const WeightedLpSpec& spec) {
  std::vector<double> y;
  y.reserve(tail.size());
  for (const State& s : tail) y.push_back(weighted_lp_value(s, spec));
  return y;
}

namespace {
double time_envelope(double t, double t_support) {
  if (t >= t_support) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * t / t_support);
  return c * c;
}
}  // namespace

TestFunction cosine_bump_test_function(const Gridd& grid, double t_support) {
  detail::require(t_support > 0, "test function support must be positive");
  const int dim = grid.dim();
  const Eigen::Array3d L(grid.length(0), grid.length(1), grid.length(2));
  TestFunction phi;
  phi.value = [=](const Eigen::Array3d& x, double t) {
    double v = time_envelope(t, t_support);
    for (int a = 0; a < dim; ++a) {
      const double s = std::sin(std::numbers::pi * x(a) / L(a));
      v *= s * s;
    }
    return v;
  };
  phi.gradient = [=](const Eigen::Array3d& x, double t) {
    const double env = time_envelope(t, t_support);
    Eigen::Array3d sq = Eigen::Array3d::Ones();
    Eigen::Array3d dsq = Eigen::Array3d::Zero();
    for (int a = 0; a < dim; ++a) {
      const double arg = std::numbers::pi * x(a) / L(a);
      sq(a) = std::sin(arg) * std::sin(arg);
      dsq(a) = std::numbers::pi / L(a) * std::sin(2 * arg);
    }
    Eigen::Array3d g = Eigen::Array3d::Zero();
    for (int a = 0; a < dim; ++a) {
      double prod = env * dsq(a);
      for (int b = 0; b < dim; ++b)
        if (b != a) prod *= sq(b);
      g(a) = prod;
    }
    return g;
  };
  return phi;
}

TestFunction space_constant_test_function(double t_support) {
  detail::require(t_support > 0, "test function support must be positive");
  TestFunction phi;
  phi.value = [=](const Eigen::Array3d&, double t) { return time_envelope(t, t_support); };
  phi.gradient = [](const Eigen::Array3d&, double) { return Eigen::Array3d::Zero().eval(); };
  return phi;
}

WeakFormAccumulator::WeakFormAccumulator(TestFunction phi, Params params, Regularizationd reg)
    : phi_(std::move(phi)), params_(params), reg_(reg) {}

WeakFormAccumulator::Sampled WeakFormAccumulator::sample(const Gridd& grid, double t) const {
  Sampled out;
  out.phi = Fieldd::from_function(grid, [&](const Eigen::Array3d& x) { return phi_.value(x, t); });
  out.grad.assign(grid.dim(), Fieldd(grid));
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const Eigen::Array3d g = phi_.gradient(grid.center(k), t);
    for (int a = 0; a < grid.dim(); ++a) out.grad[a][k] = g(a);
  }
  return out;
}

void WeakFormAccumulator::add(const State& s) {
  const Gridd& g = s.grid();
  Sampled current = sample(g, s.t);
  if (!started_) {
    // - int u0 phi(., 0)
    acc_.u -= integrate(g, s.u.values() * current.phi.values());
    acc_.v -= integrate(g, s.v.values() * current.phi.values());
    acc_.w -= integrate(g, s.w.values() * current.phi.values());
    started_ = true;
  } else {
    const State& a = last_;
    const double dt = s.t - a.t;
    detail::require(dt > 0, "weak form snapshots must be strictly increasing in time");
    const Values dphi = current.phi.values() - last_phi_.phi.values();
    acc_.u -= integrate(g, a.u.values() * dphi);
    acc_.v -= integrate(g, a.v.values() * dphi);
    acc_.w -= integrate(g, a.w.values() * dphi);

    const auto grad_u = grad_centered(a.u);
    const auto grad_v = grad_centered(a.v);
    const auto grad_w = grad_centered(a.w);
    Values du = Values::Zero(g.size()), dv = du, dw = du;
    for (int d = 0; d < g.dim(); ++d) {
      const Values& gp = last_phi_.grad[d].values();
      du += grad_u[d].values() * gp;
      dv += grad_v[d].values() * gp;
      dw += grad_w[d].values() * gp;
    }
    const Values u_sens = a.u.values() * reg_.prime(a.u.values());
    const Values v_sens = a.v.values() * reg_.prime(a.v.values());
    const Values lambda = params_.alpha * reg_.value(a.u.values()) + params_.beta * reg_.value(a.v.values());
    acc_.u += dt * integrate(g, du - params_.chi1 * u_sens * dw);
    acc_.v += dt * integrate(g, dv - params_.chi2 * v_sens * dw);
    acc_.w += dt * integrate(g, dw + lambda * a.w.values() * last_phi_.phi.values());
  }
  last_ = s;
  last_phi_ = std::move(current);
}

WeakResiduals WeakFormAccumulator::result() const {
  detail::require(started_, "weak form accumulator has no snapshots");
  const Gridd& g = last_.grid();
  const double tail = last_phi_.phi.values().abs().maxCoeff();
  if (tail > 1e-12 * std::max(1.0, g.measure()))
    throw std::invalid_argument("test function does not vanish at the final time of the trajectory");
  return acc_;
}

WeakResiduals weak_form_residual(std::span<const State> traj, const Params& p, const Regularizationd& reg,
                                 const TestFunction& phi) {
  detail::require(!traj.empty(), "weak_form_residual needs a trajectory");
  WeakFormAccumulator acc(phi, p, reg);
  for (const State& s : traj) acc.add(s);
  return acc.result();
}

std::vector<WindowIntegrals> spacetime_windows(std::span<const State> traj, int n_for_exponent) {
  detail::require(n_for_exponent >= 1, "spacetime_windows needs n >= 1");
  std::vector<WindowIntegrals> out;
  if (traj.size() < 2) return out;
  const double t0 = traj.front().t;
  const double span = traj.back().t - t0;
  const int windows = int(std::floor(span + 1e-9));
  out.resize(std::max(windows, 0));
  for (int j = 0; j < windows; ++j) out[j].t_start = t0 + j;
  const double power = double(n_for_exponent + 2) / double(n_for_exponent);

  struct Integrands {
    double fu, fv, hw, gw4, up, vp;
  };
  auto integrands = [&](const State& s) {
    const Gridd& g = s.grid();
    return Integrands{fisher_information(s.u, population_floor(s.mean_u0)),
                      fisher_information(s.v, population_floor(s.mean_v0)),
                      integrate(g, hessian_entries(s.w).frobenius_squared()),
                      integrate(g, grad_squared(s.w).square()),
                      integrate(g, s.u.values().pow(power)),
                      integrate(g, s.v.values().pow(power))};
  };
  Integrands prev = integrands(traj[0]);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const State& a = traj[k];
    const State& b = traj[k + 1];
    const Integrands next = integrands(b);
    const double dt = b.t - a.t;
    const int j = int(std::floor(0.5 * (a.t + b.t) - t0));
    if (j >= 0 && j < windows && dt > 0) {
      WindowIntegrals& win = out[j];
      win.fisher_u += 0.5 * dt * (prev.fu + next.fu);
      win.fisher_v += 0.5 * dt * (prev.fv + next.fv);
      win.hessian_w += 0.5 * dt * (prev.hw + next.hw);
      win.grad_w_4 += 0.5 * dt * (prev.gw4 + next.gw4);
      win.u_power += 0.5 * dt * (prev.up + next.up);
      win.v_power += 0.5 * dt * (prev.vp + next.vp);
      win.w_t_squared += integrate(a.grid(), ((b.w.values() - a.w.values()) / dt).square()) * dt;
    }
    prev = next;
  }
  return out;
}

double smallness_time(std::span<const DiagnosticsRecord> records, double delta) {
  detail::require(delta > 0, "smallness_time needs delta > 0");
  double t = std::numeric_limits<double>::infinity();
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->w_norm_inf > delta) break;
    t = it->t;
  }
  return t;
}

RecordBuilder::RecordBuilder(Params params, Regularizationd reg)
    : params_(params), reg_(reg), weighted_(delta_of(2.0, 0.5, params)) {}

DiagnosticsRecord RecordBuilder::operator()(const State& s, double dt_used) {
  const Gridd& g = s.grid();
  DiagnosticsRecord r;
  r.t = s.t;
  r.dt_used = dt_used;
  r.mass_u = integrate(s.u);
  r.mass_v = integrate(s.v);
  r.w_norm_1 = lp_norm(s.w, 1.0);
  r.w_norm_2 = lp_norm(s.w, 2.0);
  r.w_norm_4 = lp_norm(s.w, 4.0);
  r.w_norm_inf = lp_norm(s.w, std::numeric_limits<double>::infinity());
  r.entropy = entropy(s, params_);
  const auto parts = dissipation_parts(s, params_, reg_);
  r.dissipation = half_weighted(parts, params_);
  const double production = full_weighted(parts, params_);
  const auto hl = hessian_log_check(s);
  r.hessian_log_lhs = hl.lhs;
  r.hessian_log_rhs = hl.rhs;
  r.compound_2d = compound_2d(s);
  const auto conv = convergence_metrics(s);
  r.conv_u = conv.u;
  r.conv_v = conv.v;
  r.conv_w = conv.w;
  const auto dm = dist_mean_lq(s, std::max(2, g.dim()));
  r.dist_mean_q_u = dm.first;
  r.dist_mean_q_v = dm.second;
  if (r.w_norm_inf < weighted_.delta) {
    r.weighted_lp_y = weighted_lp_value(s, weighted_);
    if (!std::isfinite(weighted_.activation_time)) weighted_.activation_time = s.t;
  }
  const double rate = consumption_rate(s, params_, reg_);
  if (!first_ && s.t > prev_t_) {
    const double dt = s.t - prev_t_;
    r.identity_residual = (r.entropy - prev_entropy_) / dt + prev_production_;
    cumulative_ += 0.5 * dt * (rate + prev_rate_);
  }
  r.cumulative_consumption = cumulative_;
  r.min_u = s.u.values().minCoeff();
  r.min_v = s.v.values().minCoeff();
  r.min_w = s.w.values().minCoeff();
  first_ = false;
  prev_t_ = s.t;
  prev_entropy_ = r.entropy;
  prev_production_ = production;
  prev_rate_ = rate;
  return r;
}

}  // namespace chemotaxis_lab
