#include "chemotaxis_lab/solver.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <string>

namespace chemotaxis_lab {

namespace {

constexpr double kTiny = 1e-300;

// chi * face_average(s F'(s)) * face_gradient(w), zero on boundary faces
FaceFluxd chemotaxis_flux(const Fieldd& density, const FaceFluxd& w_gradient, const Regularizationd& reg, double chi) {
  const Fieldd sensitivity(density.grid(), density.values() * reg.prime(density.values()));
  FaceFluxd flux = face_average(sensitivity);
  for (int a = 0; a < density.grid().dim(); ++a) flux.component(a) *= chi * w_gradient.component(a);
  return flux;
}

void require_admissible(const Fieldd& f, const char* name) {
  if (!f.all_finite()) throw PositivityError(std::string("non-finite value in ") + name);
  if (f.values().minCoeff() < 0.0) throw PositivityError(std::string("negative value in ") + name);
}

}  // namespace

double stable_dt(const State& state, const Params& params, const Regularizationd& reg, const StepPolicy& policy) {
  policy.validate();
  const Gridd& g = state.grid();
  const double h = g.min_spacing();
  const double diffusive = h * h / (2.0 * g.dim());
  const double speed = std::max(params.chi1, params.chi2) * face_gradient(state.w).max_abs();
  const double advective = h / (speed + kTiny);
  const double rate = params.alpha * reg.value(state.u.values().maxCoeff()) +
                      params.beta * reg.value(state.v.values().maxCoeff());
  const double consumption = rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  const double dt = std::min(policy.cfl_safety * std::min({diffusive, advective, consumption}), policy.dt_max);
  detail::require(dt > 0 && std::isfinite(dt), "stable_dt produced a degenerate step");
  return dt;
}

State step(const State& state, const Params& params, const Regularizationd& reg, double dt) {
  detail::require(dt > 0 && std::isfinite(dt), "step needs a positive finite dt");
  const FaceFluxd w_gradient = face_gradient(state.w);

  State next = state;
  next.t = state.t + dt;
  next.u.values() += dt * (laplacian(state.u).values() -
                           flux_divergence(chemotaxis_flux(state.u, w_gradient, reg, params.chi1)).values());
  next.v.values() += dt * (laplacian(state.v).values() -
                           flux_divergence(chemotaxis_flux(state.v, w_gradient, reg, params.chi2)).values());
  const Fieldd::Values rate = params.alpha * reg.value(state.u.values()) + params.beta * reg.value(state.v.values());
  next.w.values() += dt * (laplacian(state.w).values() - rate * state.w.values());

  require_admissible(next.u, "u");
  require_admissible(next.v, "v");
  require_admissible(next.w, "w");
  return next;
}

namespace {

// Covers [state.t, state.t + dt] by recursive halving until every piece is
// positivity preserving.
State covering_step(const State& state, const Params& params, const Regularizationd& reg, double dt, int depth,
                    int max_depth) {
  try {
    return step(state, params, reg, dt);
  } catch (const PositivityError& e) {
    if (depth >= max_depth)
      throw SolverAbort(std::string("positivity could not be restored on a frozen schedule: ") + e.what());
    const State half = covering_step(state, params, reg, 0.5 * dt, depth + 1, max_depth);
    return covering_step(half, params, reg, 0.5 * dt, depth + 1, max_depth);
  }
}

}  // namespace

Trajectory advance(const State& state, const ProblemSpec& spec, double until, const AdvanceOptions& options) {
  detail::require(until > state.t, "advance needs until > state.t");
  detail::require(spec.output_stride >= 1, "output_stride must be at least 1");
  spec.policy.validate();

  RecordBuilder builder(spec.params, spec.reg);
  Trajectory traj;
  State current = state;
  traj.records.push_back(builder(current, 0.0));
  if (options.keep_snapshots) traj.snapshots.push_back(current);

  const double snap = 1e-12 * std::max(1.0, std::abs(until));
  long accepted = 0;
  std::size_t schedule_index = 0;
  const bool frozen = !options.schedule.empty();

  while (current.t < until) {
    const double remaining = until - current.t;
    double dt;
    if (frozen) {
      if (schedule_index >= options.schedule.size()) throw SolverAbort("frozen dt schedule exhausted before the end time");
      dt = options.schedule[schedule_index++];
    } else {
      dt = stable_dt(current, spec.params, spec.reg, spec.policy);
    }
    bool last = dt >= remaining - snap;
    if (last) dt = remaining;

    State next;
    if (frozen) {
      next = covering_step(current, spec.params, spec.reg, dt, 0, spec.policy.positivity_retries);
    } else {
      int attempt = 0;
      for (;;) {
        try {
          next = step(current, spec.params, spec.reg, dt);
          break;
        } catch (const PositivityError& e) {
          if (++attempt > spec.policy.positivity_retries)
            throw SolverAbort("positivity retries exhausted at t = " + std::to_string(current.t) + ": " + e.what());
          dt *= 0.5;
          last = false;
        }
      }
    }
    if (last) next.t = until;

    ++accepted;
    traj.dt_schedule.push_back(dt);
    if (options.observer) options.observer(current, next);
    current = std::move(next);

    if (accepted % spec.output_stride == 0 || last) {
      traj.records.push_back(builder(current, dt));
      if (options.keep_snapshots) traj.snapshots.push_back(current);
    }
  }
  traj.final_state = std::move(current);
  return traj;
}

ProblemSpec refined_mesh(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  const Gridd& g = spec.grid;
  Eigen::Array3i cells = g.cells();
  for (int a = 0; a < g.dim(); ++a) cells(a) *= 2;
  out.grid = Gridd(g.dim(), cells, Eigen::Array3d(g.length(0), g.length(1), g.length(2)));
  return out;
}

State reference_solve(const ProblemSpec& spec, double until, int refinement, bool halve_mesh) {
  detail::require(refinement >= 2, "reference_solve needs refinement >= 2");
  ProblemSpec ref = halve_mesh ? refined_mesh(spec) : spec;
  ref.policy.cfl_safety /= refinement;
  ref.policy.dt_max /= refinement;
  ref.output_stride = INT_MAX;
  const State initial = make_initial(ref);
  return advance(initial, ref, until).final_state;
}

}  // namespace chemotaxis_lab
