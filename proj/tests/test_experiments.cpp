#include "chemotaxis_lab/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace chemotaxis_lab;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("chemotaxis_lab_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

RunConfig small_coupled() {
  RunConfig c = preset("smooth-1d");
  c.spec.t_end = 0.02;
  c.spec.output_stride = 5;
  return c;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndPreset) {
  const RunConfig c = parse(
      "# comment\n"
      "chi1 = 2.5   ; trailing comment\n"
      "preset = 2d-coupled\n"
      "cells = 16, 8\n"
      "lengths = 2, 1\n"
      "regularization = rational\n"
      "epsilon = 0.25\n"
      "u.profile = two-bump\n"
      "u.center = 0.1, 0.2\n"
      "checks = equilibrium, bounded\n");
  EXPECT_EQ(c.preset, "2d-coupled");
  EXPECT_EQ(c.spec.params.chi1, 2.5);
  EXPECT_EQ(c.spec.params.chi2, preset("2d-coupled").spec.params.chi2);
  EXPECT_EQ(c.spec.grid.dim(), 2);
  EXPECT_EQ(c.spec.grid.cells(0), 16);
  EXPECT_EQ(c.spec.grid.cells(1), 8);
  EXPECT_EQ(c.spec.grid.length(0), 2.0);
  EXPECT_EQ(c.spec.reg.kind(), RegularizationKind::Rational);
  EXPECT_EQ(c.spec.reg.epsilon(), 0.25);
  EXPECT_EQ(c.spec.initial.u.kind, ProfileKind::TwoBump);
  EXPECT_EQ(c.spec.initial.u.center(1), 0.2);
  EXPECT_EQ(c.checks.size(), 2u);
}

TEST(Config, RejectsUnknownKeysWithLineContext) {
  try {
    parse("chi1 = 1\n\nchii2 = 3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.ini:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("chii2"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse("chi1 2\n"), ConfigError);
  EXPECT_THROW(parse("chi1 = 2\nchi1 = 3\n"), ConfigError);
  EXPECT_THROW(parse("chi1 = two\n"), ConfigError);
  EXPECT_THROW(parse("cells = 8\nlengths = 1, 1\n"), ConfigError);
  EXPECT_THROW(parse("epsilon = 0.1\n"), ConfigError);
  EXPECT_THROW(parse("regularization = logarithmic\nepsilon = 1.5\n"), ConfigError);
  EXPECT_THROW(parse("checks = psychic\n"), ConfigError);
  EXPECT_THROW(parse("u.profile = square\n"), ConfigError);
  EXPECT_THROW(parse("cells = 1\n"), ConfigError);
  try {
    parse("seed = 3\nchi1 = x\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.ini:2: chi1"), std::string::npos) << e.what();
  }
}

TEST(Config, EntriesRoundTrip) {
  for (const auto& name : preset_names()) {
    const RunConfig a = preset(name);
    std::string text = "preset = " + name + "\n";
    for (const auto& [key, value] : config_entries(a)) text += key + " = " + value + "\n";
    const RunConfig b = parse(text);
    EXPECT_EQ(config_entries(a), config_entries(b)) << name;
    const State sa = make_initial(a.spec), sb = make_initial(b.spec);
    EXPECT_TRUE((sa.u.values() == sb.u.values()).all()) << name;
  }
}

TEST(Config, ValidationCatchesBadValues) {
  RunConfig c = small_coupled();
  EXPECT_NO_THROW(validate(c));
  c.spec.params.chi1 = -1;
  EXPECT_THROW(validate(c), ConfigError);
  c = small_coupled();
  c.spec.initial.perturbation = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = small_coupled();
  c.spec.t_end = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = small_coupled();
  c.spec.initial.w = Profile::constant(0.0);
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Presets, CatalogIsValidAndUnknownNamesListAlternatives) {
  EXPECT_GE(preset_names().size(), 8u);
  for (const auto& name : preset_names()) {
    const RunConfig c = preset(name);
    EXPECT_EQ(c.preset, name);
    EXPECT_NO_THROW(validate(c)) << name;
  }
  try {
    preset("nonesuch");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("homogeneous-ode"), std::string::npos);
  }
}

TEST(Presets, PaperParameterization) {
  const RunConfig h = preset("homogeneous-ode");
  EXPECT_EQ(h.spec.initial.u.kind, ProfileKind::Constant);
  EXPECT_EQ(h.spec.params.alpha, 1.0);
  EXPECT_EQ(h.spec.params.beta, 1.0);
  EXPECT_EQ(h.spec.params.chi1, 1.0);

  const RunConfig b = preset("2d-beyond-threshold");
  EXPECT_EQ(b.spec.params.chi1, 4.0);
  EXPECT_EQ(b.spec.params.chi2, 4.0);
  EXPECT_EQ(b.spec.initial.w.level + b.spec.initial.w.amplitude, 1.0);
  const auto [product, bound] = threshold_product(b.spec.params, 1.0, 2);
  EXPECT_GT(product, bound);
  EXPECT_GT(threshold_product(b.spec.params, make_initial(b.spec).w0_max, 2).first, bound);

  EXPECT_EQ(preset("eps-sweep-3d").spec.reg.kind(), RegularizationKind::Logarithmic);
  EXPECT_EQ(preset("eps-sweep-3d").spec.grid.dim(), 3);
}

TEST(Run, VerdictsAndManifest) {
  const RunResult r = run(small_coupled());
  EXPECT_TRUE(r.completed);
  EXPECT_TRUE(r.manifest.all_pass());
  for (const char* name : {"completed", "mass_conservation_u", "mass_conservation_v", "w_sup_nonincreasing",
                           "w_l1_nonincreasing", "w_l2_nonincreasing", "w_l4_nonincreasing", "nonnegative",
                           "consumption_bound", "weighted_lp_coercivity"})
    EXPECT_NE(r.manifest.find(name), nullptr) << name;
  EXPECT_EQ(r.records.back().t, 0.02);
}

TEST(Run, FailingOracleFailsTheManifest) {
  RunConfig c = preset("2d-coupled");
  c.spec.grid = Gridd::uniform(2, 8);
  c.spec.t_end = 0.5;
  const RunResult r = run(c);
  ASSERT_NE(r.manifest.find("equilibrium"), nullptr);
  EXPECT_FALSE(r.manifest.find("equilibrium")->pass);
  EXPECT_FALSE(r.manifest.all_pass());
}

TEST(Run, SolverAbortBecomesFailedVerdict) {
  RunConfig c = small_coupled();
  c.spec.params.chi1 = c.spec.params.chi2 = 200;
  c.spec.policy.positivity_retries = 1;
  c.spec.policy.cfl_safety = 1;
  c.spec.initial.u = {ProfileKind::Gaussian, 0.0, 5.0, Eigen::Array3d::Constant(0.5), 0.05};
  RunResult r;
  ASSERT_NO_THROW(r = run(c));
  EXPECT_FALSE(r.completed);
  EXPECT_FALSE(r.manifest.find("completed")->pass);
  EXPECT_FALSE(r.manifest.all_pass());
  EXPECT_EQ(r.records.size(), 1u);
}

TEST(Run, HomogeneousOracles) {
  RunConfig c = preset("homogeneous-ode");
  c.spec.t_end = 0.2;
  const RunResult r = run(c);
  ASSERT_NE(r.manifest.find("homogeneous_w_exact"), nullptr);
  ASSERT_NE(r.manifest.find("budget_closure"), nullptr);
  EXPECT_TRUE(r.manifest.all_pass());
}

TEST(Output, CsvSchemaAndDeterminism) {
  RunConfig c = small_coupled();
  c.spec.initial.perturbation = 0.1;
  const auto first = scratch("a"), second = scratch("b");
  c.output_dir = first;
  run_to_disk(c);
  c.output_dir = second;
  run_to_disk(c);
  const std::string a = slurp(first / "records.csv");
  const std::string b = slurp(second / "records.csv");
  EXPECT_EQ(a, b);

  std::istringstream in(a);
  std::string schema, header, row;
  std::getline(in, schema);
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(schema, "# chemotaxis_lab records schema " + std::to_string(kRecordsSchemaVersion));
  std::string expected;
  for (const auto& col : record_columns()) expected += (expected.empty() ? "" : ",") + col;
  EXPECT_EQ(header, expected);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), long(record_columns().size()) - 1);

  const std::string manifest = slurp(c.output_dir / "manifest.txt");
  EXPECT_NE(manifest.find("[verdicts]"), std::string::npos);
  EXPECT_NE(manifest.find("overall PASS"), std::string::npos);
  EXPECT_NE(manifest.find("config.seed = "), std::string::npos);
}

TEST(Output, SeventeenSignificantDigitsRoundTrip) {
  DiagnosticsRecord r;
  r.t = 0.1 + 0.2;
  r.entropy = -1.0 / 3.0;
  const auto path = std::filesystem::temp_directory_path() / "chemotaxis_lab_digits.csv";
  write_records_csv(path, std::vector<DiagnosticsRecord>{r});
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(std::stod(line.substr(0, line.find(','))), r.t);
}

TEST(Sweep, RejectsBadEpsilonLists) {
  const RunConfig c = preset("smooth-2d");
  const std::vector<double> ascending{0.1, 0.2}, zero{0.2, 0.0}, big{1.0, 0.5}, single{0.1};
  EXPECT_THROW(eps_sweep(c, ascending), std::invalid_argument);
  EXPECT_THROW(eps_sweep(c, zero), std::invalid_argument);
  EXPECT_THROW(eps_sweep(c, big), std::invalid_argument);
  EXPECT_THROW(eps_sweep(c, single), std::invalid_argument);
  RunConfig identity = c;
  identity.spec.reg = Regularizationd::identity();
  const std::vector<double> ok{0.2, 0.1};
  EXPECT_THROW(eps_sweep(identity, ok), std::invalid_argument);
}

TEST(Sweep, HomogeneousErrorIsTheRateMismatch) {
  RunConfig c = preset("homogeneous-ode");
  c.spec.t_end = 0.5;
  c.spec.reg = Regularizationd::rational(0.1);
  const std::vector<double> eps{0.4, 0.2, 0.1};
  const SweepReport report = eps_sweep(c, eps);
  const double a = 1.0, b = 0.5, w0 = 1.0, t = 0.5;
  for (const auto& m : report.members) {
    const auto reg = Regularizationd::rational(m.epsilon);
    const double exact = w0 * (std::exp(-(reg.value(a) + reg.value(b)) * t) - std::exp(-(a + b) * t));
    EXPECT_NEAR(m.error[2], exact, 1e-3 * exact) << m.epsilon;
    EXPECT_EQ(m.error[0], 0.0);
    EXPECT_EQ(m.result.dt_schedule, report.reference.dt_schedule);
  }
  EXPECT_TRUE(report.manifest.find("eps_errors_strictly_decreasing") != nullptr);
}

TEST(Refinement, RejectsDegenerateRequests) {
  RunConfig c = small_coupled();
  EXPECT_THROW(refinement_study(c, 2), std::invalid_argument);
  c.cell_budget = 100;
  EXPECT_THROW(refinement_study(c, 3), std::invalid_argument);
}

TEST(Refinement, SmallStudyReportsOrders) {
  RunConfig c = small_coupled();
  c.refinement_factor = 2;
  c.spec.t_end = 0.01;
  const RefinementReport r = refinement_study(c, 3, 2);
  ASSERT_EQ(r.levels.size(), 3u);
  EXPECT_EQ(r.levels[2].cells(0), 64);
  EXPECT_EQ(r.solution_order.size(), 1u);
  EXPECT_NEAR(r.solution_order[0], 2.0, 0.4);
  EXPECT_EQ(r.residual_order.size(), 2u);
  EXPECT_EQ(r.runs.size(), 3u);
  EXPECT_TRUE(r.manifest.find("weak_residual_shrink")->pass);
}

TEST(Restrict, AveragesBlocks) {
  const Gridd fine = Gridd::uniform(2, 4), coarse = Gridd::uniform(2, 2);
  const Fieldd f = Fieldd::from_function(fine, [](const Eigen::Array3d& x) { return x(0) + 10 * x(1); });
  const Fieldd r = restrict_to(f, coarse);
  EXPECT_NEAR(r[coarse.index(0, 0, 0)], 0.25 + 2.5, 1e-14);
  EXPECT_NEAR(r[coarse.index(1, 1, 0)], 0.75 + 7.5, 1e-14);
  EXPECT_NEAR(integrate(r), integrate(f), 1e-14);
  EXPECT_THROW(restrict_to(f, Gridd::uniform(2, 3)), std::invalid_argument);
}

TEST(Threads, ResolutionOrder) {
  ::setenv("CHEMOTAXIS_LAB_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(0), 3);
  EXPECT_EQ(resolve_threads(2), 2);
  ::unsetenv("CHEMOTAXIS_LAB_THREADS");
  EXPECT_EQ(resolve_threads(0), 1);
}
