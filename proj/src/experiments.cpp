#include "chemotaxis_lab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numbers>
#include <thread>

#ifndef CHEMOTAXIS_LAB_VERSION
#define CHEMOTAXIS_LAB_VERSION "unknown"
#endif

namespace chemotaxis_lab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-step monitor for the checks that must hold between any two solver steps.
class StepMonitor {
 public:
  StepMonitor(const State& initial, const WeightedLpSpec& weighted)
      : weighted_(weighted), mass_u0_(integrate(initial.u)), mass_v0_(integrate(initial.v)), last_(initial) {
    norms_ = w_norms(initial);
    if (norms_[0] < weighted_.delta) y_ = weighted_lp_value(initial, weighted_);
  }

  void operator()(const State&, const State& after) {
    ++steps_;
    mass_drift_u_ = std::max(mass_drift_u_, std::abs(integrate(after.u) - mass_u0_) / mass_u0_);
    mass_drift_v_ = std::max(mass_drift_v_, std::abs(integrate(after.v) - mass_v0_) / mass_v0_);
    const auto next = w_norms(after);
    sup_increase_ = std::max(sup_increase_, next[0] - norms_[0]);
    for (int k = 1; k < 4; ++k) lp_increase_[k - 1] = std::max(lp_increase_[k - 1], next[k] - norms_[k]);
    norms_ = next;
    if (next[0] < weighted_.delta) {
      const double y = weighted_lp_value(after, weighted_);
      if (std::isfinite(y_)) {
        y_increase_ = std::max(y_increase_, y - y_);
        ++y_pairs_;
      }
      y_ = y;
    } else {
      y_ = kInf;
    }
    last_ = after;
  }

  long steps_ = 0;
  WeightedLpSpec weighted_;
  double mass_u0_, mass_v0_;
  double mass_drift_u_ = 0, mass_drift_v_ = 0;
  double sup_increase_ = -kInf;
  std::array<double, 3> lp_increase_{-kInf, -kInf, -kInf};
  double y_ = kInf;
  double y_increase_ = -kInf;
  long y_pairs_ = 0;
  std::array<double, 4> norms_{};
  State last_;

 private:
  static std::array<double, 4> w_norms(const State& s) {
    return {s.w.values().maxCoeff(), lp_norm(s.w, 1.0), lp_norm(s.w, 2.0), lp_norm(s.w, 4.0)};
  }
};

Verdict verdict_at_most(std::string name, double measured, double tolerance, std::string detail = "") {
  return {std::move(name), measured <= tolerance, measured, tolerance, std::move(detail)};
}

Verdict verdict_at_least(std::string name, double measured, double tolerance, std::string detail = "") {
  return {std::move(name), measured >= tolerance, measured, tolerance, std::move(detail)};
}

bool homogeneous_recipe(const RunConfig& c) {
  const InitialRecipe& r = c.spec.initial;
  return r.perturbation == 0 && r.u.kind == ProfileKind::Constant && r.v.kind == ProfileKind::Constant &&
         r.w.kind == ProfileKind::Constant;
}

double median(std::vector<double> x) {
  if (x.empty()) return 0;
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size() / 2;
  return x.size() % 2 ? x[m] : 0.5 * (x[m - 1] + x[m]);
}

std::string grid_summary(const Gridd& g) {
  std::string cells, lengths;
  for (int a = 0; a < g.dim(); ++a) {
    cells += (a ? "x" : "") + std::to_string(g.cells(a));
    lengths += (a ? "x" : "") + format_real(g.length(a));
  }
  return std::to_string(g.dim()) + "D " + cells + " cells on " + lengths;
}

void check_oracles(const RunConfig& config, const State& initial, const RunResult& r, std::vector<Verdict>& out) {
  const ProblemSpec& spec = config.spec;
  const auto& records = r.records;
  const double w0_mass = integrate(initial.w);
  for (const std::string& check : config.checks) {
    if (check == "homogeneous-exact" && homogeneous_recipe(config)) {
      const double a = spec.initial.u.level, b = spec.initial.v.level, c = spec.initial.w.level;
      const double lambda = spec.params.alpha * spec.reg.value(a) + spec.params.beta * spec.reg.value(b);
      double uv = 0, w = 0;
      for (const auto& rec : records) {
        uv = std::max({uv, std::abs(rec.conv_u) / a, std::abs(rec.conv_v) / b});
        const double exact = c * std::exp(-lambda * rec.t);
        w = std::max({w, std::abs(rec.w_norm_inf - exact) / exact, std::abs(rec.min_w - exact) / exact});
      }
      out.push_back(verdict_at_most("homogeneous_uv_constant", uv, 1e-12, "max relative deviation of u, v"));
      out.push_back(verdict_at_most("homogeneous_w_exact", w, 1e-3, "max relative error against c exp(-lambda t)"));
    } else if (check == "budget-closure") {
      double gap = 0;
      for (const auto& rec : records)
        gap = std::max(gap, std::abs(rec.cumulative_consumption - (w0_mass - rec.w_norm_1)) / w0_mass);
      out.push_back(verdict_at_most("budget_closure", gap, 1e-3, "max |consumed - loss of int w| / int w0"));
    } else if (check == "heat-fourier" && records.size() >= 2 && records.front().conv_u > 0) {
      const double L = spec.grid.length(0);
      double worst = 0;
      for (std::size_t k = 1; k < records.size(); ++k) {
        const double exact = std::exp(-std::numbers::pi * std::numbers::pi * records[k].t / (L * L));
        worst = std::max(worst, std::abs(records[k].conv_u / records.front().conv_u / exact - 1));
      }
      out.push_back(verdict_at_most("heat_fourier", worst, 0.05, "max relative deviation from exp(-pi^2 t)"));
    } else if (check == "equilibrium" && !records.empty()) {
      const auto& last = records.back();
      double first_time = kInf;
      for (const auto& rec : records)
        if (std::max({rec.conv_u, rec.conv_v, rec.conv_w}) < 1e-3) {
          first_time = rec.t;
          break;
        }
      out.push_back(verdict_at_most("equilibrium", std::max({last.conv_u, last.conv_v, last.conv_w}), 1e-3,
                                    "first time below tolerance " + format_real(first_time)));
    } else if (check == "bounded" && records.size() >= 2) {
      std::vector<double> tail;
      double sup = 0;
      const double half = 0.5 * records.back().t;
      for (const auto& rec : records) {
        sup = std::max(sup, rec.compound_2d);
        if (rec.t >= half) tail.push_back(rec.compound_2d);
      }
      out.push_back(verdict_at_most("bounded_compound", sup / median(tail), 3.0,
                                    "sup compound_2d / median over the final half"));
    }
  }
}

RunResult run_impl(const RunConfig& config, std::span<const double> schedule, const StepObserver& extra) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const ProblemSpec& spec = config.spec;
  const State initial = make_initial(spec);
  const WeightedLpSpec weighted = delta_of(2.0, 0.5, spec.params);
  StepMonitor monitor(initial, weighted);

  AdvanceOptions options;
  options.schedule = schedule;
  options.observer = [&](const State& before, const State& after) {
    monitor(before, after);
    if (extra) extra(before, after);
  };

  RunResult result;
  std::string abort_reason;
  try {
    Trajectory traj = advance(initial, spec, spec.t_end, options);
    result.records = std::move(traj.records);
    result.final_state = std::move(traj.final_state);
    result.dt_schedule = std::move(traj.dt_schedule);
    result.completed = true;
  } catch (const SolverAbort& e) {
    abort_reason = e.what();
    result.final_state = monitor.last_;
    result.records.push_back(RecordBuilder(spec.params, spec.reg)(initial, 0.0));
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto& v = result.manifest.verdicts;
  v.push_back({"completed", result.completed, result.final_state.t, spec.t_end, abort_reason});
  v.push_back(verdict_at_most("mass_conservation_u", monitor.mass_drift_u_, 1e-12, "max relative drift per step"));
  v.push_back(verdict_at_most("mass_conservation_v", monitor.mass_drift_v_, 1e-12, "max relative drift per step"));
  if (monitor.steps_ > 0) {
    v.push_back(verdict_at_most("w_sup_nonincreasing", monitor.sup_increase_, 0.0, "max per-step increase"));
    const char* names[] = {"w_l1_nonincreasing", "w_l2_nonincreasing", "w_l4_nonincreasing"};
    for (int k = 0; k < 3; ++k)
      v.push_back(verdict_at_most(names[k], monitor.lp_increase_[k], 1e-10, "max per-step increase"));
  }
  if (!result.records.empty()) {
    double min_value = kInf, consumed = 0, hessian_ratio = 0;
    bool w_positive = true;
    for (const auto& rec : result.records) {
      min_value = std::min({min_value, rec.min_u, rec.min_v, rec.min_w});
      consumed = std::max(consumed, rec.cumulative_consumption);
      w_positive = w_positive && rec.min_w > w_guard(initial);
      // once w is flat to round-off both sides are noise
      if (rec.w_norm_inf - rec.min_w <= 1e-8 * rec.w_norm_inf) continue;
      if (rec.hessian_log_rhs > 0) hessian_ratio = std::max(hessian_ratio, rec.hessian_log_lhs / rec.hessian_log_rhs);
      else if (rec.hessian_log_lhs > 0) hessian_ratio = kInf;
    }
    v.push_back(verdict_at_least("nonnegative", min_value, 0.0, "min over records of min u, v, w"));
    v.push_back(verdict_at_most("consumption_bound", consumed / integrate(initial.w), 1 + 1e-3,
                                "max cumulative consumption / int w0"));
    if (w_positive)
      v.push_back(verdict_at_most("hessian_log_inequality", hessian_ratio, 1.05,
                                  "max over records with resolved w variation of lhs / rhs"));
  }
  v.push_back(verdict_at_least("weighted_lp_coercivity", std::min(weighted.a1, weighted.a2), 0.0, "min(A_1, A_2)"));
  if (monitor.y_pairs_ > 0)
    v.push_back(verdict_at_most("weighted_lp_nonincreasing", monitor.y_increase_, 1e-8,
                                "max per-step increase of y once max w < delta"));
  if (result.completed) check_oracles(config, initial, result, v);

  auto& e = result.manifest.entries;
  e.emplace_back("manifest_version", std::to_string(kManifestVersion));
  e.emplace_back("code_version", CHEMOTAXIS_LAB_VERSION);
  e.emplace_back("preset", config.preset.empty() ? "none" : config.preset);
  for (const auto& [key, value] : config_entries(config)) e.emplace_back("config." + key, value);
  e.emplace_back("grid", grid_summary(spec.grid));
  const Params& p = spec.params;
  e.emplace_back("params", "chi1=" + format_real(p.chi1) + " chi2=" + format_real(p.chi2) +
                               " alpha=" + format_real(p.alpha) + " beta=" + format_real(p.beta));
  e.emplace_back("regularization", to_string(spec.reg.kind()) +
                                       (spec.reg.is_identity() ? "" : " eps=" + format_real(spec.reg.epsilon())));
  e.emplace_back("within_theorem_hypothesis", p.within_theorem_hypothesis() ? "true" : "false");
  const int n = std::clamp(spec.grid.dim(), 2, 5);
  const auto [product, bound] = threshold_product(p, initial.w0_max, n);
  e.emplace_back("threshold_product", format_real(product));
  e.emplace_back("threshold_bound", format_real(bound));
  e.emplace_back("weighted.delta", format_real(weighted.delta));
  e.emplace_back("weighted.a1", format_real(weighted.a1));
  e.emplace_back("weighted.a2", format_real(weighted.a2));
  e.emplace_back("weighted.smallness_time", format_real(smallness_time(result.records, weighted.delta)));
  e.emplace_back("status", result.completed ? "completed" : "aborted");
  if (!result.completed) e.emplace_back("abort_reason", abort_reason);
  e.emplace_back("steps", std::to_string(monitor.steps_));
  e.emplace_back("t_final", format_real(result.final_state.t));
  e.emplace_back("wall_time_s", format_real(wall));
  if (!result.records.empty()) {
    const auto values = record_values(result.records.back());
    for (std::size_t k = 0; k < values.size(); ++k) e.emplace_back("final." + record_columns()[k], format_real(values[k]));
  }
  return result;
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(count, 1));
  std::vector<std::exception_ptr> errors(count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double sup_distance(const Fieldd& a, const Fieldd& b) { return (a.values() - b.values()).abs().maxCoeff(); }

double log_ratio_order(double coarse, double fine, double factor) {
  return std::log(std::abs(coarse) / std::abs(fine)) / std::log(factor);
}

}  // namespace

bool RunManifest::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

const Verdict* RunManifest::find(const std::string& name) const {
  for (const auto& v : verdicts)
    if (v.name == name) return &v;
  return nullptr;
}

RunResult run(const RunConfig& config) { return run_impl(config, {}, {}); }

RunResult run_to_disk(const RunConfig& config) {
  RunResult result = run(config);
  std::filesystem::create_directories(config.output_dir);
  write_records_csv(config.output_dir / "records.csv", result.records);
  write_manifest(config.output_dir / "manifest.txt", result.manifest);
  return result;
}

void write_records_csv(const std::filesystem::path& path, std::span<const DiagnosticsRecord> records) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "# chemotaxis_lab records schema %d\n", kRecordsSchemaVersion);
  const auto& columns = record_columns();
  for (std::size_t k = 0; k < columns.size(); ++k) std::fprintf(f, "%s%s", k ? "," : "", columns[k].c_str());
  std::fputc('\n', f);
  for (const auto& r : records) {
    const auto values = record_values(r);
    for (std::size_t k = 0; k < values.size(); ++k) std::fprintf(f, "%s%.17g", k ? "," : "", values[k]);
    std::fputc('\n', f);
  }
  std::fclose(f);
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# chemotaxis_lab manifest\n";
  for (const auto& [key, value] : manifest.entries) out << key << " = " << value << '\n';
  out << "\n[verdicts]\n";
  out << "# name status measured tolerance | detail\n";
  char buf[512];
  for (const auto& v : manifest.verdicts) {
    std::snprintf(buf, sizeof buf, "%s %s %.17g %.17g", v.name.c_str(), v.pass ? "PASS" : "FAIL", v.measured,
                  v.tolerance);
    out << buf << " | " << v.detail << '\n';
  }
  out << "overall " << (manifest.all_pass() ? "PASS" : "FAIL") << '\n';
  out << "[end]\n";
}

SweepReport eps_sweep(const RunConfig& config, std::span<const double> eps_list, int threads) {
  if (config.spec.reg.is_identity())
    throw std::invalid_argument("eps_sweep needs a logarithmic or rational family in the config");
  if (eps_list.size() < 2) throw std::invalid_argument("eps_sweep needs at least two epsilon values");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0 && eps_list[k] < 1))
      throw std::invalid_argument("epsilon " + format_real(eps_list[k]) +
                                  " outside (0, 1); the eps -> 0 limit is the Identity reference");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw std::invalid_argument("eps_list must be strictly descending");
  }

  RunConfig reference = config;
  reference.spec.reg = Regularizationd::identity();
  reference.output_dir = config.output_dir / "reference";
  SweepReport report;
  report.reference = run(reference);
  const RunResult& ref = report.reference;
  if (!ref.completed) throw SolverAbort("eps_sweep reference run aborted");

  report.members.resize(eps_list.size());
  parallel_for(int(eps_list.size()), threads, [&](int i) {
    RunConfig member = config;
    member.spec.reg = Regularizationd(config.spec.reg.kind(), eps_list[i]);
    member.output_dir = config.output_dir / ("eps_" + format_real(eps_list[i]));
    SweepMember& m = report.members[i];
    m.epsilon = eps_list[i];
    m.result = run_impl(member, ref.dt_schedule, {});
    const State& s = m.result.final_state;
    const State& r = ref.final_state;
    m.error = {sup_distance(s.u, r.u), sup_distance(s.v, r.v), sup_distance(s.w, r.w)};
  });

  auto& e = report.manifest.entries;
  e.emplace_back("manifest_version", std::to_string(kManifestVersion));
  e.emplace_back("code_version", CHEMOTAXIS_LAB_VERSION);
  e.emplace_back("preset", config.preset.empty() ? "none" : config.preset);
  for (const auto& [key, value] : config_entries(config)) e.emplace_back("config." + key, value);
  e.emplace_back("family", to_string(config.spec.reg.kind()));
  e.emplace_back("schedule_steps", std::to_string(ref.dt_schedule.size()));
  for (const auto& m : report.members)
    e.emplace_back("error.eps_" + format_real(m.epsilon),
                   format_real(m.error[0]) + " " + format_real(m.error[1]) + " " + format_real(m.error[2]));

  bool all_members = ref.manifest.all_pass();
  for (const auto& m : report.members) all_members = all_members && m.result.completed && m.result.manifest.all_pass();
  auto& v = report.manifest.verdicts;
  v.push_back({"sweep_members_pass", all_members, double(all_members), 1.0, "reference and every member pass their own verdicts"});

  const char* component[] = {"u", "v", "w"};
  double worst_drop = kInf;
  for (std::size_t k = 1; k < report.members.size(); ++k)
    for (int c = 0; c < 3; ++c)
      worst_drop = std::min(worst_drop, report.members[k - 1].error[c] - report.members[k].error[c]);
  v.push_back({"eps_errors_strictly_decreasing", worst_drop > 0, worst_drop, 0.0,
               "min over consecutive pairs and components of the error drop"});

  double min_order = kInf;
  for (int c = 0; c < 3; ++c) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(report.members.size());
    for (const auto& m : report.members) {
      const double x = std::log(m.epsilon), y = std::log(m.error[c]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    report.order[c] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    e.emplace_back(std::string("order.") + component[c], format_real(report.order[c]));
    min_order = std::min(min_order, report.order[c]);
  }
  v.push_back(verdict_at_least("eps_order", std::isfinite(min_order) ? min_order : -kInf, 0.7,
                               "min over u, v, w of the fitted order in epsilon"));
  return report;
}

Fieldd restrict_to(const Fieldd& fine, const Gridd& coarse) {
  const Gridd& g = fine.grid();
  detail::require(g.dim() == coarse.dim(), "restrict_to needs grids of equal dimension");
  Eigen::Array3i ratio = Eigen::Array3i::Ones();
  for (int a = 0; a < g.dim(); ++a) {
    detail::require(g.cells(a) % coarse.cells(a) == 0, "fine mesh is not an integer refinement of the coarse mesh");
    ratio(a) = g.cells(a) / coarse.cells(a);
  }
  Fieldd out(coarse);
  const double weight = 1.0 / double(ratio.prod());
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const Eigen::Array3i i = g.multi_index(k);
    out[coarse.index(i(0) / ratio(0), i(1) / ratio(1), i(2) / ratio(2))] += weight * fine[k];
  }
  return out;
}

RefinementReport refinement_study(const RunConfig& config, int levels, int threads) {
  if (levels < 3) throw std::invalid_argument("refinement_study needs at least 3 levels");
  validate(config);
  const int factor = config.refinement_factor;
  const Gridd& g0 = config.spec.grid;

  std::vector<RunConfig> configs(levels, config);
  long scale = 1;
  for (int l = 0; l < levels; ++l) {
    Eigen::Array3i cells = g0.cells();
    for (int a = 0; a < g0.dim(); ++a) cells(a) = int(cells(a) * scale);
    RunConfig& c = configs[l];
    c.spec.grid = Gridd(g0.dim(), cells, Eigen::Array3d(g0.length(0), g0.length(1), g0.length(2)));
    if (c.spec.grid.size() > config.cell_budget)
      throw std::invalid_argument("refinement level " + std::to_string(l) + " needs " +
                                  std::to_string(c.spec.grid.size()) + " cells, above the budget of " +
                                  std::to_string(config.cell_budget));
    c.spec.policy.dt_max = config.spec.policy.dt_max / double(scale * scale);
    c.spec.output_stride = INT_MAX;
    c.output_dir = config.output_dir / ("level_" + std::to_string(l));
    scale *= factor;
  }

  RefinementReport report;
  report.levels.resize(levels);
  std::vector<RunResult>& results = report.runs;
  results.resize(levels);
  parallel_for(levels, threads, [&](int l) {
    const ProblemSpec& spec = configs[l].spec;
    RefinementLevel& level = report.levels[l];
    level.cells = spec.grid.cells();
    level.h = spec.grid.min_spacing();
    WeakFormAccumulator weak(cosine_bump_test_function(spec.grid, spec.t_end), spec.params, spec.reg);
    weak.add(make_initial(spec));
    double worst = -kInf;
    double e_before = entropy(make_initial(spec), spec.params);
    StepObserver observer = [&](const State& before, const State& after) {
      const double e_after = entropy(after, spec.params);
      worst = std::max(worst, (e_after - e_before) / (after.t - before.t) + entropy_production(before, spec.params, spec.reg));
      e_before = e_after;
      weak.add(after);
      ++level.steps;
    };
    results[l] = run_impl(configs[l], {}, observer);
    if (!results[l].completed) throw SolverAbort("refinement level " + std::to_string(l) + " aborted");
    level.identity_residual = worst;
    level.weak = weak.result();
    level.final_state = results[l].final_state;
  });

  for (int l = 0; l + 1 < levels; ++l)
    report.levels[l].self_error = sup_distance(report.levels[l].final_state.u,
                                               restrict_to(report.levels[l + 1].final_state.u, report.levels[l].final_state.grid()));
  for (int l = 0; l + 2 < levels; ++l)
    report.solution_order.push_back(log_ratio_order(report.levels[l].self_error, report.levels[l + 1].self_error, factor));
  for (int l = 0; l + 1 < levels; ++l) {
    const auto& a = report.levels[l];
    const auto& b = report.levels[l + 1];
    report.residual_order.push_back(log_ratio_order(a.identity_residual, b.identity_residual, factor));
    report.weak_order.push_back({log_ratio_order(a.weak.u, b.weak.u, factor), log_ratio_order(a.weak.v, b.weak.v, factor),
                                 log_ratio_order(a.weak.w, b.weak.w, factor)});
  }

  auto& e = report.manifest.entries;
  e.emplace_back("manifest_version", std::to_string(kManifestVersion));
  e.emplace_back("code_version", CHEMOTAXIS_LAB_VERSION);
  e.emplace_back("preset", config.preset.empty() ? "none" : config.preset);
  for (const auto& [key, value] : config_entries(config)) e.emplace_back("config." + key, value);
  e.emplace_back("levels", std::to_string(levels));
  for (int l = 0; l < levels; ++l) {
    const auto& lv = report.levels[l];
    const std::string p = "level" + std::to_string(l) + ".";
    e.emplace_back(p + "grid", grid_summary(configs[l].spec.grid));
    e.emplace_back(p + "steps", std::to_string(lv.steps));
    e.emplace_back(p + "identity_residual", format_real(lv.identity_residual));
    e.emplace_back(p + "weak_residual", format_real(lv.weak.u) + " " + format_real(lv.weak.v) + " " + format_real(lv.weak.w));
    if (l + 1 < levels) e.emplace_back(p + "self_error_u", format_real(lv.self_error));
  }
  for (std::size_t k = 0; k < report.solution_order.size(); ++k)
    e.emplace_back("order.solution." + std::to_string(k), format_real(report.solution_order[k]));
  for (std::size_t k = 0; k < report.residual_order.size(); ++k)
    e.emplace_back("order.identity_residual." + std::to_string(k), format_real(report.residual_order[k]));

  auto& v = report.manifest.verdicts;
  bool members = true;
  for (const auto& r : results) members = members && r.manifest.all_pass();
  v.push_back({"levels_pass", members, double(members), 1.0, "every level passes its own run verdicts"});

  // tolerance model tol_l = 2 |r_0| (h_l / h_0)^2
  const double r0 = std::abs(report.levels.front().identity_residual);
  double worst_margin = -kInf;
  for (int l = 0; l < levels; ++l) {
    const double ratio = report.levels[l].h / report.levels.front().h;
    const double tol = 2 * r0 * ratio * ratio;
    worst_margin = std::max(worst_margin, report.levels[l].identity_residual - tol);
  }
  v.push_back(verdict_at_most("identity_residual_within_tol", worst_margin, 0.0,
                              "max over levels of residual - 2 |r_0| (h / h_0)^2"));
  v.push_back(verdict_at_most("identity_residual_reduction",
                              std::abs(report.levels.back().identity_residual) / r0, 1e-2,
                              "|finest residual| / |coarsest residual|"));

  double weak_shrink = kInf;
  for (int l = 0; l + 1 < levels; ++l) {
    const auto& a = report.levels[l].weak;
    const auto& b = report.levels[l + 1].weak;
    weak_shrink = std::min({weak_shrink, std::abs(a.u) / std::abs(b.u), std::abs(a.v) / std::abs(b.v),
                            std::abs(a.w) / std::abs(b.w)});
  }
  v.push_back(verdict_at_least("weak_residual_shrink", weak_shrink, 1.5, "min per-level shrink factor over u, v, w"));

  double order_gap = 0;
  for (double o : report.solution_order) order_gap = std::max(order_gap, std::isfinite(o) ? std::abs(o - 2.0) : kInf);
  v.push_back(verdict_at_most("solution_order", order_gap, 0.4, "max |order - 2| of the self-convergence orders"));
  return report;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CHEMOTAXIS_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace chemotaxis_lab
