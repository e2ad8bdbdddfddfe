#pragma once

#include "chemotaxis_lab/diagnostics.hpp"
#include "chemotaxis_lab/model.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace chemotaxis_lab {

/// An explicit step produced a negative cell; retry with a smaller step.
class PositivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Step-size reduction could not restore positivity.
class SolverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// cfl_safety * min(h^2 / (2 dim), h / V_max, 1 / (alpha F(max u) + beta F(max v)), dt_max)
/// where V_max = max{chi1, chi2} * max |face gradient of w|.
double stable_dt(const State& state, const Params& params, const Regularizationd& reg, const StepPolicy& policy);

/// One forward Euler step of the (regularized) system in conservation form.
/// Throws PositivityError if any updated cell is negative or not finite.
State step(const State& state, const Params& params, const Regularizationd& reg, double dt);

/// Called after every accepted step with the states before and after it.
using StepObserver = std::function<void(const State& before, const State& after)>;

struct AdvanceOptions {
  bool keep_snapshots = false;       // store the state at every record
  StepObserver observer;             // optional per-step hook
  std::span<const double> schedule;  // replay these step sizes instead of stable_dt
};

struct Trajectory {
  State final_state;
  std::vector<DiagnosticsRecord> records;
  std::vector<State> snapshots;
  std::vector<double> dt_schedule;  // accepted step sizes
};

/// Advances to `until`. Records are emitted for the starting state, every
/// `output_stride` accepted steps, and at `until` exactly.
Trajectory advance(const State& state, const ProblemSpec& spec, double until, const AdvanceOptions& options = {});

/// Same scheme with the step size divided by `refinement` and, optionally,
/// the mesh halved.
State reference_solve(const ProblemSpec& spec, double until, int refinement, bool halve_mesh = false);

/// Spec with every mesh spacing halved.
ProblemSpec refined_mesh(const ProblemSpec& spec);

}  // namespace chemotaxis_lab
