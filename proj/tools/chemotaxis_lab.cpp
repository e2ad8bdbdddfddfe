#include "chemotaxis_lab/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace chemotaxis_lab;

namespace {

struct Common {
  std::string config_path;
  std::string preset_name;
  std::string out;
  long seed = -1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "flat key = value config file");
  app->add_option("--preset", c.preset_name, "named preset (see `presets`)");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "seed for the initial perturbation")->check(CLI::NonNegativeNumber);
}

RunConfig resolve(const Common& c) {
  if (c.config_path.empty() && c.preset_name.empty()) throw ConfigError("give --config and/or --preset");
  RunConfig config = c.preset_name.empty() ? RunConfig{} : preset(c.preset_name);
  if (!c.config_path.empty()) config = load_config(c.config_path, std::move(config));
  if (c.seed >= 0) apply_setting(config, "seed", std::to_string(c.seed));
  if (!c.out.empty()) config.output_dir = c.out;
  validate(config);
  return config;
}

void print_verdicts(const RunManifest& m) {
  for (const auto& v : m.verdicts)
    std::printf("%-34s %s  measured %-12.5g tolerance %.5g\n", v.name.c_str(), v.pass ? "PASS" : "FAIL", v.measured,
                v.tolerance);
}

void write_run(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  write_records_csv(dir / "records.csv", r.records);
  write_manifest(dir / "manifest.txt", r.manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference lab for the two-species chemotaxis-consumption system"};
  app.require_subcommand(1);

  Common common;
  int threads = 0;
  int levels = 3;
  std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};

  auto* run_cmd = app.add_subcommand("run", "advance one configuration and write records.csv + manifest.txt");
  add_common(run_cmd, common);

  auto* sweep_cmd = app.add_subcommand("sweep-eps", "compare regularized runs against the Identity reference");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--eps", eps_list, "comma separated, strictly descending")->delimiter(',');
  sweep_cmd->add_option("--threads", threads, "worker threads");

  auto* refine_cmd = app.add_subcommand("refine", "refinement study with empirical orders");
  add_common(refine_cmd, common);
  refine_cmd->add_option("--levels", levels, "number of levels (>= 3)");
  refine_cmd->add_option("--threads", threads, "worker threads");

  auto* presets_cmd = app.add_subcommand("presets", "list the preset catalog");

  auto* check_cmd = app.add_subcommand("check", "validate a configuration and print it fully resolved");
  add_common(check_cmd, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets_cmd->parsed()) {
      for (const auto& name : preset_names()) std::cout << name << '\n';
      return 0;
    }
    const RunConfig config = resolve(common);
    if (check_cmd->parsed()) {
      if (!config.preset.empty()) std::cout << "# preset " << config.preset << '\n';
      for (const auto& [key, value] : config_entries(config)) std::cout << key << " = " << value << '\n';
      const int n = std::clamp(config.spec.grid.dim(), 2, 5);
      const auto [product, bound] = threshold_product(config.spec.params, make_initial(config.spec).w0_max, n);
      std::cout << "# threshold product " << format_real(product) << " vs " << format_real(bound) << '\n';
      return 0;
    }
    if (run_cmd->parsed()) {
      const RunResult r = run_to_disk(config);
      print_verdicts(r.manifest);
      std::cout << "wrote " << (config.output_dir / "records.csv").string() << '\n';
      return r.manifest.all_pass() ? 0 : 1;
    }
    if (sweep_cmd->parsed()) {
      const SweepReport report = eps_sweep(config, eps_list, resolve_threads(threads));
      write_run(config.output_dir / "reference", report.reference);
      for (const auto& m : report.members) write_run(config.output_dir / ("eps_" + format_real(m.epsilon)), m.result);
      std::filesystem::create_directories(config.output_dir);
      write_manifest(config.output_dir / "manifest.txt", report.manifest);
      for (const auto& m : report.members)
        std::printf("eps %-8g  err u %.4e  v %.4e  w %.4e\n", m.epsilon, m.error[0], m.error[1], m.error[2]);
      print_verdicts(report.manifest);
      return report.manifest.all_pass() ? 0 : 1;
    }
    if (refine_cmd->parsed()) {
      const RefinementReport report = refinement_study(config, levels, resolve_threads(threads));
      for (std::size_t l = 0; l < report.runs.size(); ++l)
        write_run(config.output_dir / ("level_" + std::to_string(l)), report.runs[l]);
      std::filesystem::create_directories(config.output_dir);
      write_manifest(config.output_dir / "manifest.txt", report.manifest);
      for (const auto& lv : report.levels)
        std::printf("h %-10.4g residual %+.4e  weak %.3e %.3e %.3e  self %.3e\n", lv.h, lv.identity_residual,
                    lv.weak.u, lv.weak.v, lv.weak.w, lv.self_error);
      print_verdicts(report.manifest);
      return report.manifest.all_pass() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
