#pragma once

#include "chemotaxis_lab/grid.hpp"
#include "chemotaxis_lab/regularization.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>

namespace chemotaxis_lab {

/// Chemotactic sensitivities and consumption rates.
struct Params {
  double chi1 = 1.0;
  double chi2 = 1.0;
  double alpha = 1.0;
  double beta = 1.0;

  /// Throws on negative or non-finite values.
  void validate() const;

  /// True when chi1, chi2, alpha, beta are all strictly positive, which is
  /// the hypothesis of the global existence and convergence results.
  bool within_theorem_hypothesis() const;
};

enum class ProfileKind { Constant, Cosine, Gaussian, TwoBump };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& name);

/// Initial profile of one species.
///
///   Constant   level
///   Cosine     level + amplitude * prod_a cos(pi x_a / L_a)
///   Gaussian   level + amplitude * exp(-|x - center|^2 / (2 width^2))
///   TwoBump    Gaussian at `center` plus its mirror image at L - center
///
/// Centers are given as fractions of the domain side lengths. Samples are
/// clipped at zero.
struct Profile {
  ProfileKind kind = ProfileKind::Constant;
  double level = 1.0;
  double amplitude = 0.0;
  Eigen::Array3d center = Eigen::Array3d::Constant(0.5);
  double width = 0.1;

  static Profile constant(double level) { return {ProfileKind::Constant, level, 0.0, Eigen::Array3d::Constant(0.5), 0.1}; }

  Fieldd sample(const Gridd& grid) const;
};

struct InitialRecipe {
  Profile u = Profile::constant(1.0);
  Profile v = Profile::constant(1.0);
  Profile w = Profile::constant(1.0);
  // relative multiplicative noise in [-perturbation, perturbation], must be < 1
  double perturbation = 0.0;
  std::uint64_t seed = 0;
};

/// Time step control for the explicit solver.
struct StepPolicy {
  double cfl_safety = 0.9;
  double dt_max = std::numeric_limits<double>::infinity();
  int positivity_retries = 40;

  void validate() const;
};

struct ProblemSpec {
  Gridd grid;
  Params params;
  Regularizationd reg;
  InitialRecipe initial;
  double t_end = 1.0;
  int output_stride = 100;
  StepPolicy policy;
};

/// Solution snapshot plus the reference values frozen at t = 0.
struct State {
  double t = 0.0;
  Fieldd u;
  Fieldd v;
  Fieldd w;
  double mean_u0 = 0.0;
  double mean_v0 = 0.0;
  double w0_max = 0.0;

  const Gridd& grid() const { return u.grid(); }

  /// Checks nonnegativity, finiteness, positive masses and max(w) <= max(w0).
  void validate() const;
};

State make_initial(const ProblemSpec& spec);

/// Builds the t = 0 state from explicit fields, rejecting negative cells and
/// identically vanishing components.
State make_initial(Fieldd u0, Fieldd v0, Fieldd w0);

/// (max{chi1, chi2} * w0_max, pi sqrt(2/n)); the first below the second is
/// the classical small-data boundedness condition.
std::pair<double, double> threshold_product(const Params& params, double w0_max, int n);

}  // namespace chemotaxis_lab
