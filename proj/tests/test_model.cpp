#include "chemotaxis_lab/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace chemotaxis_lab;
using std::numbers::pi;

namespace {

ProblemSpec constant_spec(double a, double b, double c) {
  ProblemSpec spec;
  spec.grid = Gridd::uniform(2, 8);
  spec.initial.u = Profile::constant(a);
  spec.initial.v = Profile::constant(b);
  spec.initial.w = Profile::constant(c);
  return spec;
}

}  // namespace

TEST(Params, Validation) {
  EXPECT_NO_THROW((Params{1, 2, 0.5, 0.5}.validate()));
  EXPECT_THROW((Params{-1, 1, 1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((Params{1, 1, -0.1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((Params{1, 1, 1, std::nan("")}.validate()), std::invalid_argument);
  EXPECT_TRUE((Params{1, 1, 1, 1}.within_theorem_hypothesis()));
  EXPECT_FALSE((Params{1, 1, 0, 1}.within_theorem_hypothesis()));
  EXPECT_FALSE((Params{0, 1, 1, 1}.within_theorem_hypothesis()));
}

TEST(MakeInitial, ConstantRecipe) {
  const State s = make_initial(constant_spec(2.0, 3.0, 0.5));
  EXPECT_EQ(s.t, 0.0);
  EXPECT_DOUBLE_EQ(s.mean_u0, 2.0);
  EXPECT_DOUBLE_EQ(s.mean_v0, 3.0);
  EXPECT_DOUBLE_EQ(s.w0_max, 0.5);
  EXPECT_NO_THROW(s.validate());
}

TEST(MakeInitial, CosineBumpMeanConvergesAtSecondOrder) {
  // 1 + cos(pi x) on [0, 1] has mean exactly 1; the midpoint rule is exact for
  // the cosine mode on a cell-centered grid, so the error is round-off
  for (int n : {8, 32, 128}) {
    ProblemSpec spec = constant_spec(1, 1, 1);
    spec.grid = Gridd::uniform(1, n);
    spec.initial.u = {ProfileKind::Cosine, 1.0, 1.0, Eigen::Array3d::Constant(0.5), 0.1};
    const State s = make_initial(spec);
    EXPECT_NEAR(s.mean_u0, 1.0, 1e-13);
    EXPECT_NEAR(s.u[0], 1.0 + std::cos(pi * 0.5 / n), 1e-15);
  }
}

TEST(MakeInitial, ProfilesAreNonnegativeAndShaped) {
  ProblemSpec spec = constant_spec(1, 1, 1);
  spec.grid = Gridd::uniform(2, 16);
  spec.initial.u = {ProfileKind::Gaussian, 0.1, 2.0, Eigen::Array3d(0.3, 0.6, 0.5), 0.1};
  spec.initial.v = {ProfileKind::TwoBump, 0.0, 1.0, Eigen::Array3d(0.25, 0.25, 0.5), 0.08};
  spec.initial.w = {ProfileKind::Cosine, 0.5, 1.0, Eigen::Array3d::Constant(0.5), 0.1};
  const State s = make_initial(spec);
  EXPECT_GE(s.w.values().minCoeff(), 0.0);
  // gaussian peak sits in the cell containing (0.3, 0.6)
  Eigen::Index peak;
  s.u.values().maxCoeff(&peak);
  EXPECT_EQ(peak, spec.grid.index(4, 9, 0));
  // two-bump is symmetric under x -> 1 - x
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(s.v[spec.grid.index(i, j, 0)], s.v[spec.grid.index(15 - i, 15 - j, 0)], 1e-14);
}

TEST(MakeInitial, PerturbationIsDeterministic) {
  ProblemSpec spec = constant_spec(1, 1, 1);
  spec.initial.perturbation = 0.2;
  spec.initial.seed = 42;
  const State a = make_initial(spec);
  const State b = make_initial(spec);
  EXPECT_TRUE((a.u.values() == b.u.values()).all());
  EXPECT_GT(a.u.values().maxCoeff() - a.u.values().minCoeff(), 0.0);
  EXPECT_LE(a.u.values().maxCoeff(), 1.2);
  spec.initial.seed = 43;
  EXPECT_FALSE((make_initial(spec).u.values() == a.u.values()).all());
}

TEST(MakeInitial, RejectsInvalidData) {
  const Gridd g = Gridd::uniform(1, 4);
  Fieldd good = Fieldd::constant(g, 1.0);
  Fieldd negative = good;
  negative[2] = -1e-3;
  EXPECT_THROW(make_initial(negative, good, good), std::invalid_argument);
  EXPECT_THROW(make_initial(good, good, Fieldd(g)), std::invalid_argument);
  EXPECT_THROW(make_initial(good, Fieldd(g), good), std::invalid_argument);
  Fieldd nan_field = good;
  nan_field[0] = std::nan("");
  EXPECT_THROW(make_initial(good, nan_field, good), std::invalid_argument);
  // a constant recipe with a negative level clips to zero everywhere
  EXPECT_THROW(make_initial(constant_spec(-1.0, 1.0, 1.0)), std::invalid_argument);
}

TEST(MakeInitial, WMayVanishOnPartOfTheDomain) {
  const Gridd g = Gridd::uniform(1, 4);
  Fieldd w = Fieldd::constant(g, 0.0);
  w[1] = 1.0;
  EXPECT_NO_THROW(make_initial(Fieldd::constant(g, 1.0), Fieldd::constant(g, 1.0), w));
}

TEST(State, ValidationCatchesViolations) {
  State s = make_initial(constant_spec(1, 1, 1));
  s.w[3] = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.w[3] = 1.0;
  s.u[0] = -1e-12;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ThresholdProduct, Formula) {
  auto [p1, b1] = threshold_product(Params{1, 1, 1, 1}, 1.0, 2);
  EXPECT_DOUBLE_EQ(p1, 1.0);
  EXPECT_DOUBLE_EQ(b1, pi);
  EXPECT_LT(p1, b1);

  auto [p2, b2] = threshold_product(Params{4, 4, 1, 1}, 1.0, 2);
  EXPECT_DOUBLE_EQ(p2, 4.0);
  EXPECT_GT(p2, b2);

  EXPECT_NEAR(threshold_product(Params{1, 3, 1, 1}, 0.5, 5).second, 1.9869, 1e-4);
  EXPECT_DOUBLE_EQ(threshold_product(Params{1, 3, 1, 1}, 0.5, 5).first, 1.5);
  EXPECT_THROW(threshold_product(Params{}, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(threshold_product(Params{}, 1.0, 6), std::invalid_argument);
}

TEST(StepPolicy, Validation) {
  EXPECT_NO_THROW(StepPolicy{}.validate());
  EXPECT_THROW((StepPolicy{0.0, 1.0, 40}.validate()), std::invalid_argument);
  EXPECT_THROW((StepPolicy{1.5, 1.0, 40}.validate()), std::invalid_argument);
  EXPECT_THROW((StepPolicy{0.9, 1.0, 0}.validate()), std::invalid_argument);
}
