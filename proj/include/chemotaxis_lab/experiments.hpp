#pragma once

#include "chemotaxis_lab/diagnostics.hpp"
#include "chemotaxis_lab/model.hpp"
#include "chemotaxis_lab/solver.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chemotaxis_lab {

inline constexpr int kRecordsSchemaVersion = 1;
inline constexpr int kManifestVersion = 1;

/// Bad configuration text or value; the message carries the source line and key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional oracle checks a run can request on top of the generic verdicts.
///
///   homogeneous-exact   u, v constant; w = c exp(-(alpha F(a) + beta F(b)) t)
///   budget-closure      cumulative consumption equals the loss of int w
///   heat-fourier        conv_u(t) / conv_u(0) = exp(-pi^2 t / L^2)
///   equilibrium         conv_u, conv_v, conv_w below 1e-3 at t_end
///   bounded             sup compound_2d <= 3 * median over the final half
const std::vector<std::string>& known_checks();

struct RunConfig {
  ProblemSpec spec;
  std::string preset;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> checks;
  // refinement studies
  long cell_budget = 4'000'000;
  int refinement_factor = 2;
};

/// Applies one `key = value` setting. Throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` text; `#` and `;` start comments. A `preset` line is
/// applied first, every other key overrides it. Duplicate keys are rejected.
/// Settings are applied on top of `base`.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>", RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every key with its current value, in a fixed order; parse_config of the
/// result reproduces the config.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

/// Throws ConfigError unless the config resolves to a valid problem.
void validate(const RunConfig& config);

std::vector<std::string> preset_names();
/// Throws ConfigError listing the available presets for an unknown name.
RunConfig preset(const std::string& name);

struct Verdict {
  std::string name;
  bool pass = false;
  double measured = 0;
  double tolerance = 0;
  std::string detail;
};

struct RunManifest {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<Verdict> verdicts;

  bool all_pass() const;
  const Verdict* find(const std::string& name) const;
};

struct RunResult {
  RunManifest manifest;
  std::vector<DiagnosticsRecord> records;
  State final_state;
  std::vector<double> dt_schedule;
  bool completed = false;
};

/// Advances the configured problem to t_end and evaluates every verdict whose
/// preconditions hold. A solver abort becomes a failed `completed` verdict.
RunResult run(const RunConfig& config);

/// run() plus <output_dir>/records.csv and <output_dir>/manifest.txt.
RunResult run_to_disk(const RunConfig& config);

void write_records_csv(const std::filesystem::path& path, std::span<const DiagnosticsRecord> records);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
std::string format_real(double x);

struct SweepMember {
  double epsilon = 0;
  std::array<double, 3> error{};  // sup-norm distance of u, v, w to the reference at t_end
  RunResult result;
};

struct SweepReport {
  std::vector<SweepMember> members;
  std::array<double, 3> order{};  // least-squares slope of log error against log epsilon
  RunResult reference;
  RunManifest manifest;
};

/// Runs the Identity reference and every epsilon of the configured family on
/// the reference's dt schedule. eps_list must be strictly descending in (0, 1).
SweepReport eps_sweep(const RunConfig& config, std::span<const double> eps_list, int threads = 1);

struct RefinementLevel {
  Eigen::Array3i cells = Eigen::Array3i::Ones();
  double h = 0;
  long steps = 0;
  double identity_residual = 0;  // max over steps of dE/dt + P
  WeakResiduals weak;
  double self_error = 0;  // sup distance of u to the next level, averaged onto this mesh
  State final_state;
};

struct RefinementReport {
  std::vector<RefinementLevel> levels;
  std::vector<double> solution_order;
  std::vector<double> residual_order;
  std::vector<std::array<double, 3>> weak_order;
  std::vector<RunResult> runs;
  RunManifest manifest;
};

/// Refines h by `refinement_factor` per level (dt follows through the
/// diffusive limit, dt_max is divided by the factor squared).
RefinementReport refinement_study(const RunConfig& config, int levels, int threads = 1);

/// Cell-average restriction of a fine field onto a mesh coarser by an integer factor.
Fieldd restrict_to(const Fieldd& fine, const Gridd& coarse);

/// `requested` if positive, else CHEMOTAXIS_LAB_THREADS, else 1.
int resolve_threads(int requested);

}  // namespace chemotaxis_lab
