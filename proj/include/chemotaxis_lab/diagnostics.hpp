#pragma once

#include "chemotaxis_lab/model.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace chemotaxis_lab {

/// One row of the diagnostics time series.
struct DiagnosticsRecord {
  double t = 0;
  double dt_used = 0;
  double mass_u = 0;
  double mass_v = 0;
  double w_norm_1 = 0;
  double w_norm_2 = 0;
  double w_norm_4 = 0;
  double w_norm_inf = 0;
  double entropy = 0;
  double dissipation = 0;
  double identity_residual = 0;
  double hessian_log_lhs = 0;
  double hessian_log_rhs = 0;
  double compound_2d = 0;
  double conv_u = 0;
  double conv_v = 0;
  double conv_w = 0;
  double dist_mean_q_u = 0;
  double dist_mean_q_v = 0;
  double weighted_lp_y = 0;
  double cumulative_consumption = 0;
  double min_u = 0;
  double min_v = 0;
  double min_w = 0;
};

/// Column names in CSV order; `record_values` returns the matching values.
const std::vector<std::string>& record_columns();
std::vector<double> record_values(const DiagnosticsRecord& r);

/// Lower bound used wherever w appears in a denominator or a logarithm.
double w_guard(const State& s);

/// E = int alpha chi2 u ln u + beta chi1 v ln v + (chi1 chi2 / 2) |grad w|^2 / w.
double entropy(const State& s, const Params& p);

/// D = (alpha chi2 / 2) int |grad u|^2/u + (beta chi1 / 2) int |grad v|^2/v
///   + (chi1 chi2 / 2) int w |D^2 ln w|^2
///   + (chi1 chi2 / 2) int (alpha F(u) + beta F(v)) |grad w|^2 / w.
double dissipation(const State& s, const Params& p, const Regularizationd& reg);

/// Exact entropy decay rate on a domain with flat boundary pieces:
/// dE/dt = -entropy_production. Each term dominates the matching term of
/// `dissipation`, so dE/dt + entropy_production <= 0 implies
/// dE/dt + dissipation <= 0.
double entropy_production(const State& s, const Params& p, const Regularizationd& reg);

/// max over consecutive snapshots of (E(t_{k+1}) - E(t_k)) / dt + P(t_k)
/// with P the entropy production.
double identity_residual(std::span<const State> window, const Params& p, const Regularizationd& reg);

struct HessianLogCheck {
  double lhs;  // int |grad w|^4 / w^3
  double rhs;  // (2 + sqrt(n))^2 int w |D^2 ln w|^2
};
HessianLogCheck hessian_log_check(const State& s);

/// int (u^2 + v^2 + |grad w|^4).
double compound_2d(const State& s);

/// int (alpha F(u) + beta F(v)) w.
double consumption_rate(const State& s, const Params& p, const Regularizationd& reg);

/// Trapezoid time integral of the consumption rate over the snapshots.
double consumption_budget(std::span<const State> traj, const Params& p, const Regularizationd& reg);

struct ConvergenceMetrics {
  double u;  // ||u - mean u0||_inf
  double v;  // ||v - mean v0||_inf
  double w;  // ||w||_inf
};
ConvergenceMetrics convergence_metrics(const State& s);

/// L^q distances of u and v to their initial means, q = n / (n - 1).
std::pair<double, double> dist_mean_lq(const State& s, int n_for_exponent);

/// Weighted functional y = int (u^p + v^p) (2 delta - w)^(-r).
struct WeightedLpSpec {
  double p = 2.0;
  double r = 0.5;
  double delta = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double activation_time = std::numeric_limits<double>::infinity();
};

/// delta = min{1, 1/chi1, 1/chi2} (p - 1 - r) r / (2 p^3), together with the
/// coercivity constants A_1, A_2 (both checked positive).
WeightedLpSpec delta_of(double p, double r, const Params& params);

/// Throws std::domain_error unless max(w) < delta.
double weighted_lp_value(const State& s, const WeightedLpSpec& spec);
std::vector<double> weighted_lp(std::span<const State> tail, const WeightedLpSpec& spec);

/// Smooth space-time test function; must vanish at the final time of the
/// trajectory it is paired with.
struct TestFunction {
  std::function<double(const Eigen::Array3d& x, double t)> value;
  std::function<Eigen::Array3d(const Eigen::Array3d& x, double t)> gradient;
};

/// phi = cos^2(pi t / (2 T)) prod_a sin^2(pi x_a / L_a) for t < T, zero after.
TestFunction cosine_bump_test_function(const Gridd& grid, double t_support);

/// phi = cos^2(pi t / (2 T)) for t < T, constant in space.
TestFunction space_constant_test_function(double t_support);

struct WeakResiduals {
  double u = 0;
  double v = 0;
  double w = 0;
};

/// Streaming evaluation of the weak-form residuals. Feed the initial state,
/// then every later snapshot in order; intervals use left-endpoint
/// quadrature for the flux terms and exact differences of the test function
/// in time.
class WeakFormAccumulator {
 public:
  WeakFormAccumulator(TestFunction phi, Params params, Regularizationd reg);

  void add(const State& s);
  WeakResiduals result() const;

 private:
  struct Sampled {
    Fieldd phi;
    std::vector<Fieldd> grad;
  };
  Sampled sample(const Gridd& grid, double t) const;

  TestFunction phi_;
  Params params_;
  Regularizationd reg_;
  bool started_ = false;
  State last_;
  Sampled last_phi_;
  WeakResiduals acc_;
};

WeakResiduals weak_form_residual(std::span<const State> traj, const Params& p, const Regularizationd& reg,
                                 const TestFunction& phi);

/// Space-time integrals over one unit time window.
struct WindowIntegrals {
  double t_start = 0;
  double fisher_u = 0;      // int int |grad u|^2 / u
  double fisher_v = 0;      // int int |grad v|^2 / v
  double hessian_w = 0;     // int int |D^2 w|^2
  double grad_w_4 = 0;      // int int |grad w|^4
  double u_power = 0;       // int int u^((n+2)/n)
  double v_power = 0;       // int int v^((n+2)/n)
  double w_t_squared = 0;   // int int w_t^2, w_t by forward difference of snapshots
};

/// Unit windows [t0 + j, t0 + j + 1] fully covered by the snapshots.
std::vector<WindowIntegrals> spacetime_windows(std::span<const State> traj, int n_for_exponent);

/// First record time after which max(w) <= delta holds for every later
/// record; +infinity if never reached.
double smallness_time(std::span<const DiagnosticsRecord> records, double delta);

/// Builds records along a trajectory; keeps what is needed for the
/// cumulative and finite-difference columns.
class RecordBuilder {
 public:
  RecordBuilder(Params params, Regularizationd reg);

  DiagnosticsRecord operator()(const State& s, double dt_used);

  const WeightedLpSpec& weighted_spec() const { return weighted_; }

 private:
  Params params_;
  Regularizationd reg_;
  WeightedLpSpec weighted_;
  bool first_ = true;
  double prev_t_ = 0;
  double prev_entropy_ = 0;
  double prev_production_ = 0;
  double prev_rate_ = 0;
  double cumulative_ = 0;
};

}  // namespace chemotaxis_lab
