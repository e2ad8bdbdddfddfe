#include "chemotaxis_lab/model.hpp"

#include <numbers>
#include <random>
#include <stdexcept>

namespace chemotaxis_lab {

void Params::validate() const {
  for (double x : {chi1, chi2, alpha, beta})
    detail::require(std::isfinite(x) && x >= 0.0, "model parameters must be finite and nonnegative");
}

bool Params::within_theorem_hypothesis() const { return chi1 > 0 && chi2 > 0 && alpha > 0 && beta > 0; }

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Constant: return "constant";
    case ProfileKind::Cosine: return "cosine";
    case ProfileKind::Gaussian: return "gaussian";
    case ProfileKind::TwoBump: return "two-bump";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  if (name == "constant") return ProfileKind::Constant;
  if (name == "cosine") return ProfileKind::Cosine;
  if (name == "gaussian") return ProfileKind::Gaussian;
  if (name == "two-bump") return ProfileKind::TwoBump;
  throw std::invalid_argument("unknown profile '" + name + "' (constant, cosine, gaussian, two-bump)");
}

Fieldd Profile::sample(const Gridd& grid) const {
  detail::require(std::isfinite(level) && std::isfinite(amplitude), "profile level and amplitude must be finite");
  detail::require(kind == ProfileKind::Constant || kind == ProfileKind::Cosine || width > 0,
                  "profile width must be positive");
  const int dim = grid.dim();
  Eigen::Array3d L(grid.length(0), grid.length(1), grid.length(2));
  auto gauss = [&](const Eigen::Array3d& x, const Eigen::Array3d& c) {
    const double r2 = (x - c * L).head(dim).square().sum();
    return std::exp(-r2 / (2.0 * width * width));
  };
  Fieldd f = Fieldd::from_function(grid, [&](const Eigen::Array3d& x) {
    switch (kind) {
      case ProfileKind::Constant: return level;
      case ProfileKind::Cosine: {
        double p = 1.0;
        for (int a = 0; a < dim; ++a) p *= std::cos(std::numbers::pi * x(a) / L(a));
        return level + amplitude * p;
      }
      case ProfileKind::Gaussian: return level + amplitude * gauss(x, center);
      case ProfileKind::TwoBump: return level + amplitude * (gauss(x, center) + gauss(x, 1.0 - center));
    }
    return level;
  });
  f.values() = f.values().max(0.0);
  return f;
}

void StepPolicy::validate() const {
  detail::require(cfl_safety > 0 && cfl_safety <= 1, "cfl_safety must lie in (0, 1]");
  detail::require(dt_max > 0, "dt_max must be positive");
  detail::require(positivity_retries >= 1, "positivity_retries must be at least 1");
}

void State::validate() const {
  detail::require(u.grid() == v.grid() && u.grid() == w.grid(), "state fields live on different grids");
  for (const Fieldd* f : {&u, &v, &w}) {
    detail::require(f->all_finite(), "state contains non-finite values");
    detail::require(f->values().minCoeff() >= 0.0, "state contains negative values");
  }
  detail::require(integrate(u) > 0 && integrate(v) > 0, "population masses must be positive");
  detail::require(w.values().maxCoeff() <= w0_max, "max(w) exceeds its initial value");
}

State make_initial(Fieldd u0, Fieldd v0, Fieldd w0) {
  for (const Fieldd* f : {&u0, &v0, &w0}) {
    detail::require(f->all_finite(), "initial data must be finite");
    detail::require(f->values().minCoeff() >= 0.0, "initial data must be nonnegative");
    detail::require(f->values().maxCoeff() > 0.0, "initial data must not vanish identically");
  }
  State s;
  s.t = 0.0;
  const double measure = u0.grid().measure();
  s.mean_u0 = integrate(u0) / measure;
  s.mean_v0 = integrate(v0) / measure;
  s.w0_max = w0.values().maxCoeff();
  s.u = std::move(u0);
  s.v = std::move(v0);
  s.w = std::move(w0);
  s.validate();
  return s;
}

State make_initial(const ProblemSpec& spec) {
  spec.params.validate();
  const InitialRecipe& r = spec.initial;
  detail::require(r.perturbation >= 0 && r.perturbation < 1, "perturbation must lie in [0, 1)");
  Fieldd u = r.u.sample(spec.grid);
  Fieldd v = r.v.sample(spec.grid);
  Fieldd w = r.w.sample(spec.grid);
  if (r.perturbation > 0) {
    std::mt19937_64 rng(r.seed);
    std::uniform_real_distribution<double> noise(-r.perturbation, r.perturbation);
    for (Fieldd* f : {&u, &v, &w})
      for (Eigen::Index k = 0; k < f->size(); ++k) (*f)[k] *= 1.0 + noise(rng);
  }
  return make_initial(std::move(u), std::move(v), std::move(w));
}

std::pair<double, double> threshold_product(const Params& params, double w0_max, int n) {
  detail::require(n >= 2 && n <= 5, "threshold_product needs n in {2, 3, 4, 5}");
  return {std::max(params.chi1, params.chi2) * w0_max, std::numbers::pi * std::sqrt(2.0 / n)};
}

}  // namespace chemotaxis_lab
