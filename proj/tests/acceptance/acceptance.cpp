// Acceptance suite: one PASS/FAIL line per primary criterion, nonzero exit on any failure.
#include "chemotaxis_lab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <string>

using namespace chemotaxis_lab;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %-26s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

bool verdict_passes(const RunResult& r, const std::string& name) {
  const Verdict* v = r.manifest.find(name);
  return v && v->pass;
}

struct PresetRun {
  RunResult result;
  double seconds = 0;
};

// A smooth positive field: offset plus a few random cosine modes.
Fieldd random_smooth_positive(const Gridd& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-0.2, 0.2);
  std::uniform_int_distribution<int> mode(0, 3);
  struct Mode {
    double a;
    int k[3];
  };
  std::vector<Mode> modes(4);
  for (auto& m : modes) m = {amp(rng), {mode(rng), mode(rng), mode(rng)}};
  return Fieldd::from_function(g, [&](const Eigen::Array3d& x) {
    double value = 1.0;
    for (const auto& m : modes) {
      double p = m.a;
      for (int a = 0; a < g.dim(); ++a) p *= std::cos(std::numbers::pi * m.k[a] * x(a) / g.length(a));
      value += p;
    }
    return value;
  });
}

}  // namespace

int main() {
  std::map<std::string, PresetRun> runs;
  for (const auto& name : preset_names()) {
    const auto start = Clock::now();
    runs[name].result = run(preset(name));
    runs[name].seconds = seconds_since(start);
  }

  {
    double worst = 0, slowest = 0;
    bool verdicts = true;
    for (const auto& [name, pr] : runs) {
      const auto& rec = pr.result.records;
      for (const auto& r : rec)
        worst = std::max({worst, std::abs(r.mass_u - rec.front().mass_u) / rec.front().mass_u,
                          std::abs(r.mass_v - rec.front().mass_v) / rec.front().mass_v});
      verdicts = verdicts && verdict_passes(pr.result, "mass_conservation_u") &&
                 verdict_passes(pr.result, "mass_conservation_v") && pr.result.completed;
      slowest = std::max(slowest, pr.seconds);
    }
    report("mass_conservation", verdicts && worst <= 1e-12 && slowest < 60,
           fmt("max relative drift %.3g (tol 1e-12), slowest preset %.2fs (limit 60s), %zu presets", worst, slowest,
               runs.size()));
  }

  {
    double sup = -INFINITY, lp = -INFINITY;
    bool ok = true;
    for (const auto& [name, pr] : runs) {
      for (const char* v : {"w_sup_nonincreasing", "w_l1_nonincreasing", "w_l2_nonincreasing", "w_l4_nonincreasing"}) {
        const Verdict* verdict = pr.result.manifest.find(v);
        ok = ok && verdict && verdict->pass;
        if (!verdict) continue;
        double& slot = std::string(v) == "w_sup_nonincreasing" ? sup : lp;
        slot = std::max(slot, verdict->measured);
      }
    }
    report("monotone_w_norms", ok,
           fmt("max per-step increase: sup %.3g (tol 0), L^p %.3g (tol 1e-10)", sup, lp));
  }

  {
    RunConfig c = preset("homogeneous-ode");
    const auto& r = runs["homogeneous-ode"].result;
    const Verdict* uv = r.manifest.find("homogeneous_uv_constant");
    const Verdict* w = r.manifest.find("homogeneous_w_exact");
    const bool pre = c.spec.t_end <= 2 && c.spec.policy.dt_max <= 1e-4;
    report("homogeneous_exact", pre && uv && w && uv->pass && w->pass,
           fmt("u,v deviation %.3g (tol 1e-12), w relative error %.3g (tol 1e-3), t_end %g, dt <= %g",
               uv ? uv->measured : NAN, w ? w->measured : NAN, c.spec.t_end, c.spec.policy.dt_max));
  }

  {
    const auto start = Clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> log_s(-8.0, 8.0), log_eps(-6.0, 0.0);
    long violations = 0;
    const long samples = 100000;
    for (const auto kind : {RegularizationKind::Logarithmic, RegularizationKind::Rational}) {
      for (long i = 0; i < samples; ++i) {
        const double s = std::pow(10.0, log_s(rng));
        const double eps = std::min(std::pow(10.0, log_eps(rng)), 0.999999);
        const Regularizationd reg(kind, eps);
        const double fp = reg.prime(s), fpp = reg.second(s);
        const auto ratio = reg.ratios(s);
        const bool ok = fp > 0 && fp <= 1 && s * fp <= 1 / eps && -s * fpp >= 0 && -s * fpp <= 2 &&
                        ratio.first <= 1 && ratio.first > 0 && ratio.second >= 0 && ratio.second <= 4;
        violations += !ok;
      }
    }
    const double elapsed = seconds_since(start);
    report("regularization_bounds", violations == 0 && elapsed < 5,
           fmt("%ld violations in 2 x %ld samples, %.2fs (limit 5s)", violations, samples, elapsed));
  }

  RefinementReport entropy_study;
  {
    const auto start = Clock::now();
    RunConfig c = preset("smooth-1d");
    c.refinement_factor = 4;
    entropy_study = refinement_study(c, 3);
    const double elapsed = seconds_since(start);
    const Verdict* tol = entropy_study.manifest.find("identity_residual_within_tol");
    const Verdict* red = entropy_study.manifest.find("identity_residual_reduction");
    std::string residuals;
    for (const auto& lv : entropy_study.levels) residuals += fmt("%.3g ", lv.identity_residual);
    report("entropy_inequality", tol->pass && red->pass && elapsed < 300,
           fmt("residuals %sfinest/coarsest %.3g (tol 1e-2), %.1fs (limit 300s)", residuals.c_str(), red->measured,
               elapsed));
  }

  {
    std::mt19937_64 rng(11);
    double worst_field = 0;
    for (int trial = 0; trial < 6; ++trial) {
      const Gridd g = trial < 3 ? Gridd::uniform(2, 96) : Gridd::uniform(3, 32);
      const Fieldd one = Fieldd::constant(g, 1.0);
      const State s = make_initial(one, one, random_smooth_positive(g, rng));
      const auto check = hessian_log_check(s);
      worst_field = std::max(worst_field, check.lhs / check.rhs);
    }
    double worst_traj = 0;
    bool traj_ok = true;
    for (const auto& [name, pr] : runs) {
      const Verdict* v = pr.result.manifest.find("hessian_log_inequality");
      if (!v) continue;
      traj_ok = traj_ok && v->pass;
      worst_traj = std::max(worst_traj, v->measured);
    }
    report("hessian_log_inequality", worst_field <= 1.05 && traj_ok,
           fmt("max lhs/rhs: smooth fields %.3g, trajectories %.3g (tol 1.05)", worst_field, worst_traj));
  }

  {
    double worst = 0;
    bool ok = true;
    for (const auto& [name, pr] : runs) {
      const Verdict* v = pr.result.manifest.find("consumption_bound");
      ok = ok && v && v->pass;
      if (v) worst = std::max(worst, v->measured);
    }
    const Verdict* closure = runs["homogeneous-ode"].result.manifest.find("budget_closure");
    report("consumption_budget", ok && closure && closure->pass,
           fmt("max consumed / int w0 %.6f (tol 1.001), homogeneous closure %.3g (tol 1e-3)", worst,
               closure ? closure->measured : NAN));
  }

  {
    const auto& coupled = runs["2d-coupled"].result;
    const auto& beyond = runs["2d-beyond-threshold"].result;
    const Verdict* eq = coupled.manifest.find("equilibrium");
    const Verdict* bounded = beyond.manifest.find("bounded_compound");
    const RunConfig b = preset("2d-beyond-threshold");
    const auto [product, bound] = threshold_product(b.spec.params, make_initial(b.spec).w0_max, 2);
    report("convergence_and_boundedness", eq && eq->pass && bounded && bounded->pass && beyond.manifest.all_pass() && product > bound,
           fmt("2d-coupled max conv %.3g at t_end (tol 1e-3); beyond-threshold chi*|w0| = %.4g > %.4g, sup/median "
               "compound %.3g (tol 3)",
               eq ? eq->measured : NAN, product, bound, bounded ? bounded->measured : NAN));
  }

  {
    const auto& r = runs["2d-coupled"].result;
    const WeightedLpSpec spec = delta_of(2.0, 0.5, preset("2d-coupled").spec.params);
    const double t0 = smallness_time(r.records, spec.delta);
    const Verdict* v = r.manifest.find("weighted_lp_nonincreasing");
    report("weighted_lp_tail", std::isfinite(t0) && spec.a1 > 0 && spec.a2 > 0 && v && v->pass,
           fmt("delta %.6g, A1 %.4g, A2 %.4g, smallness time %.4g, max per-step increase of y %.3g (tol 1e-8)",
               spec.delta, spec.a1, spec.a2, t0, v ? v->measured : NAN));
  }

  {
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
    const SweepReport sweep = eps_sweep(preset("smooth-2d"), eps);
    const Verdict* dec = sweep.manifest.find("eps_errors_strictly_decreasing");
    const Verdict* order = sweep.manifest.find("eps_order");
    std::string errors;
    for (const auto& m : sweep.members) errors += fmt("%.3g ", m.error[2]);
    report("eps_limit", dec->pass && order->pass,
           fmt("w errors %sorders u %.3f v %.3f w %.3f (min 0.7)", errors.c_str(), sweep.order[0], sweep.order[1],
               sweep.order[2]));
  }

  {
    RunConfig c = preset("smooth-1d");
    c.refinement_factor = 2;
    const RefinementReport study = refinement_study(c, 3);
    const Verdict* v = study.manifest.find("weak_residual_shrink");
    std::string weak;
    for (const auto& lv : study.levels) weak += fmt("(%.2g %.2g %.2g) ", lv.weak.u, lv.weak.v, lv.weak.w);
    report("weak_form_residuals", v->pass,
           fmt("residuals %smin shrink per halving %.3g (min 1.5)", weak.c_str(), v->measured));
  }

  {
    const RunConfig c = preset("heat-decoupled-1d");
    const auto& rec = runs["heat-decoupled-1d"].result.records;
    const double t = rec.back().t;
    const double ratio = rec.back().conv_u / rec.front().conv_u;
    const double exact = std::exp(-std::numbers::pi * std::numbers::pi * t);
    const double err = std::abs(ratio / exact - 1);
    report("heat_oracle", c.spec.grid.cells(0) == 128 && std::abs(t - 0.2) < 1e-12 && err <= 0.05,
           fmt("conv_u(0.2)/conv_u(0) = %.6f vs exp(-pi^2 0.2) = %.6f, relative error %.3g (tol 0.05)", ratio, exact,
               err));
  }

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
