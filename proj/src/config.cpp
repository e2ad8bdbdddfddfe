#include "chemotaxis_lab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace chemotaxis_lab {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) out.push_back(trim(item));
  return out;
}

double parse_real(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  double x = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw ConfigError("expected a real number, got '" + text + "'");
  return x;
}

long parse_integer(const std::string& text) {
  long x = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw ConfigError("expected an integer, got '" + text + "'");
  return x;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(item));
  return out;
}

std::string join_reals(const double* x, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? "," : "") + format_real(x[i]);
  return out;
}

Profile& profile_of(RunConfig& c, char species) {
  switch (species) {
    case 'u': return c.spec.initial.u;
    case 'v': return c.spec.initial.v;
    default: return c.spec.initial.w;
  }
}

const Profile& profile_of(const RunConfig& c, char species) { return profile_of(const_cast<RunConfig&>(c), species); }

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

// Application order matters where keys interact: cells before lengths,
// regularization before epsilon.
const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"preset", [](RunConfig& c, const std::string& v) { c.preset = v; },
                 [](const RunConfig& c) { return c.preset; }});
    k.push_back({"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
                 [](const RunConfig& c) { return c.output_dir.string(); }});
    k.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   const long s = parse_integer(v);
                   if (s < 0) throw ConfigError("seed must be nonnegative");
                   c.spec.initial.seed = std::uint64_t(s);
                 },
                 [](const RunConfig& c) { return std::to_string(c.spec.initial.seed); }});
    k.push_back({"record_stride",
                 [](RunConfig& c, const std::string& v) { c.spec.output_stride = int(parse_integer(v)); },
                 [](const RunConfig& c) { return std::to_string(c.spec.output_stride); }});
    k.push_back({"cells",
                 [](RunConfig& c, const std::string& v) {
                   const auto parts = split(v, ',');
                   if (parts.empty() || parts.size() > 3) throw ConfigError("cells takes 1 to 3 entries");
                   Eigen::Array3i cells = Eigen::Array3i::Ones();
                   for (std::size_t a = 0; a < parts.size(); ++a) cells(a) = int(parse_integer(parts[a]));
                   const Gridd& old = c.spec.grid;
                   const int dim = int(parts.size());
                   Eigen::Array3d lengths = Eigen::Array3d::Ones();
                   if (old.dim() == dim)
                     for (int a = 0; a < dim; ++a) lengths(a) = old.length(a);
                   c.spec.grid = Gridd(dim, cells, lengths);
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (int a = 0; a < c.spec.grid.dim(); ++a) out += (a ? "," : "") + std::to_string(c.spec.grid.cells(a));
                   return out;
                 }});
    k.push_back({"lengths",
                 [](RunConfig& c, const std::string& v) {
                   const auto l = parse_reals(v);
                   const Gridd& g = c.spec.grid;
                   if (int(l.size()) != g.dim()) throw ConfigError("lengths needs one entry per cells entry");
                   Eigen::Array3d lengths = Eigen::Array3d::Ones();
                   for (int a = 0; a < g.dim(); ++a) lengths(a) = l[a];
                   c.spec.grid = Gridd(g.dim(), g.cells(), lengths);
                 },
                 [](const RunConfig& c) {
                   double l[3];
                   for (int a = 0; a < 3; ++a) l[a] = c.spec.grid.length(a);
                   return join_reals(l, c.spec.grid.dim());
                 }});
    auto real_key = [&k](const std::string& name, auto member) {
      k.push_back({name, [member](RunConfig& c, const std::string& v) { member(c) = parse_real(v); },
                   [member](const RunConfig& c) { return format_real(member(const_cast<RunConfig&>(c))); }});
    };
    real_key("chi1", [](RunConfig& c) -> double& { return c.spec.params.chi1; });
    real_key("chi2", [](RunConfig& c) -> double& { return c.spec.params.chi2; });
    real_key("alpha", [](RunConfig& c) -> double& { return c.spec.params.alpha; });
    real_key("beta", [](RunConfig& c) -> double& { return c.spec.params.beta; });
    k.push_back({"regularization",
                 [](RunConfig& c, const std::string& v) {
                   const double eps = c.spec.reg.is_identity() ? 0.1 : c.spec.reg.epsilon();
                   if (v == "identity") c.spec.reg = Regularizationd::identity();
                   else if (v == "logarithmic") c.spec.reg = Regularizationd::logarithmic(eps);
                   else if (v == "rational") c.spec.reg = Regularizationd::rational(eps);
                   else throw ConfigError("regularization must be identity, logarithmic or rational");
                 },
                 [](const RunConfig& c) { return to_string(c.spec.reg.kind()); }});
    k.push_back({"epsilon",
                 [](RunConfig& c, const std::string& v) {
                   const double eps = parse_real(v);
                   if (c.spec.reg.is_identity()) {
                     if (eps != 0) throw ConfigError("epsilon needs a logarithmic or rational regularization");
                     return;
                   }
                   if (!(eps > 0 && eps < 1)) throw ConfigError("epsilon must lie in (0, 1)");
                   c.spec.reg = Regularizationd(c.spec.reg.kind(), eps);
                 },
                 [](const RunConfig& c) { return format_real(c.spec.reg.epsilon()); }});
    real_key("t_end", [](RunConfig& c) -> double& { return c.spec.t_end; });
    real_key("cfl_safety", [](RunConfig& c) -> double& { return c.spec.policy.cfl_safety; });
    real_key("dt_max", [](RunConfig& c) -> double& { return c.spec.policy.dt_max; });
    k.push_back({"positivity_retries",
                 [](RunConfig& c, const std::string& v) { c.spec.policy.positivity_retries = int(parse_integer(v)); },
                 [](const RunConfig& c) { return std::to_string(c.spec.policy.positivity_retries); }});
    real_key("perturbation", [](RunConfig& c) -> double& { return c.spec.initial.perturbation; });
    for (char s : {'u', 'v', 'w'}) {
      const std::string p = std::string(1, s) + ".";
      k.push_back({p + "profile",
                   [s](RunConfig& c, const std::string& v) {
                     try {
                       profile_of(c, s).kind = profile_kind_from_string(v);
                     } catch (const std::invalid_argument& e) {
                       throw ConfigError(e.what());
                     }
                   },
                   [s](const RunConfig& c) { return to_string(profile_of(c, s).kind); }});
      real_key(p + "level", [s](RunConfig& c) -> double& { return profile_of(c, s).level; });
      real_key(p + "amplitude", [s](RunConfig& c) -> double& { return profile_of(c, s).amplitude; });
      k.push_back({p + "center",
                   [s](RunConfig& c, const std::string& v) {
                     const auto x = parse_reals(v);
                     if (x.empty() || x.size() > 3) throw ConfigError("center takes 1 to 3 entries");
                     Eigen::Array3d center = Eigen::Array3d::Constant(0.5);
                     for (std::size_t a = 0; a < x.size(); ++a) center(a) = x[a];
                     profile_of(c, s).center = center;
                   },
                   [s](const RunConfig& c) {
                     const Eigen::Array3d& x = profile_of(c, s).center;
                     return join_reals(x.data(), std::max(1, c.spec.grid.dim()));
                   }});
      real_key(p + "width", [s](RunConfig& c) -> double& { return profile_of(c, s).width; });
    }
    k.push_back({"checks",
                 [](RunConfig& c, const std::string& v) {
                   c.checks.clear();
                   if (v.empty() || v == "none") return;
                   for (const auto& name : split(v, ',')) {
                     const auto& known = known_checks();
                     if (std::find(known.begin(), known.end(), name) == known.end())
                       throw ConfigError("unknown check '" + name + "'");
                     c.checks.push_back(name);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (const auto& name : c.checks) out += (out.empty() ? "" : ",") + name;
                   return out.empty() ? std::string("none") : out;
                 }});
    k.push_back({"cell_budget", [](RunConfig& c, const std::string& v) { c.cell_budget = parse_integer(v); },
                 [](const RunConfig& c) { return std::to_string(c.cell_budget); }});
    k.push_back({"refinement_factor",
                 [](RunConfig& c, const std::string& v) { c.refinement_factor = int(parse_integer(v)); },
                 [](const RunConfig& c) { return std::to_string(c.refinement_factor); }});
    return k;
  }();
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return &k;
  return nullptr;
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"homogeneous-exact", "budget-closure", "heat-fourier", "equilibrium",
                                                 "bounded"};
  return names;
}

std::string format_real(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + key + "'");
  if (key == "preset") {
    config = preset(value);
    return;
  }
  try {
    k->set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base) {
  struct Line {
    int number;
    std::string value;
  };
  std::map<std::string, Line> settings;
  std::string text;
  for (int number = 1; std::getline(in, text); ++number) {
    const auto comment = text.find_first_of("#;");
    const std::string line = trim(text.substr(0, comment));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (!find_key(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (settings.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(settings[key].number) + ")");
    settings[key] = {number, trim(line.substr(eq + 1))};
  }

  RunConfig config = std::move(base);
  for (const auto& k : keys()) {
    const auto it = settings.find(k.name);
    if (it == settings.end()) continue;
    try {
      apply_setting(config, k.name, it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(it->second.number) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) {
    if (k.name == "preset") continue;
    if (k.name == "epsilon" && config.spec.reg.is_identity()) continue;
    out.emplace_back(k.name, k.get(config));
  }
  return out;
}

void validate(const RunConfig& config) {
  try {
    config.spec.params.validate();
    config.spec.policy.validate();
    make_initial(config.spec).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(config.spec.t_end > 0 && std::isfinite(config.spec.t_end))) throw ConfigError("t_end must be positive");
  if (config.spec.output_stride < 1) throw ConfigError("record_stride must be at least 1");
  if (!(config.spec.initial.perturbation >= 0 && config.spec.initial.perturbation < 1))
    throw ConfigError("perturbation must lie in [0, 1)");
  if (config.refinement_factor < 2) throw ConfigError("refinement_factor must be at least 2");
  if (config.cell_budget < 1) throw ConfigError("cell_budget must be positive");
}

namespace {

Profile cosine(double level, double amplitude) { return {ProfileKind::Cosine, level, amplitude, Eigen::Array3d::Constant(0.5), 0.1}; }

Profile gaussian(double level, double amplitude, Eigen::Array3d center, double width) {
  return {ProfileKind::Gaussian, level, amplitude, center, width};
}

Profile two_bump(double level, double amplitude, Eigen::Array3d center, double width) {
  return {ProfileKind::TwoBump, level, amplitude, center, width};
}

RunConfig base(const std::string& name, int dim, int n) {
  RunConfig c;
  c.preset = name;
  c.output_dir = "out/" + name;
  c.spec.grid = Gridd::uniform(dim, n);
  c.spec.initial.seed = 20240601;
  return c;
}

const std::map<std::string, std::function<RunConfig()>>& catalog() {
  static const std::map<std::string, std::function<RunConfig()>> presets = {
      {"homogeneous-ode",
       [] {
         RunConfig c = base("homogeneous-ode", 2, 8);
         c.spec.params = {1, 1, 1, 1};
         c.spec.initial.u = Profile::constant(1.0);
         c.spec.initial.v = Profile::constant(0.5);
         c.spec.initial.w = Profile::constant(1.0);
         c.spec.t_end = 2.0;
         c.spec.policy.dt_max = 1e-4;
         c.spec.output_stride = 500;
         c.checks = {"homogeneous-exact", "budget-closure"};
         return c;
       }},
      {"heat-decoupled-1d",
       [] {
         RunConfig c = base("heat-decoupled-1d", 1, 128);
         c.spec.params = {0, 0, 0, 0};
         c.spec.initial.u = cosine(1.0, 0.5);
         c.spec.initial.v = Profile::constant(1.0);
         c.spec.initial.w = Profile::constant(1.0);
         c.spec.t_end = 0.2;
         c.spec.output_stride = 200;
         c.checks = {"heat-fourier"};
         return c;
       }},
      {"2d-coupled",
       [] {
         RunConfig c = base("2d-coupled", 2, 32);
         c.spec.params = {1, 1, 1, 1};
         c.spec.initial.u = gaussian(0.5, 1.5, {0.3, 0.35, 0.5}, 0.12);
         c.spec.initial.v = two_bump(0.3, 1.0, {0.2, 0.75, 0.5}, 0.1);
         c.spec.initial.w = cosine(0.7, 0.3);
         c.spec.t_end = 8.0;
         c.spec.output_stride = 200;
         c.checks = {"equilibrium"};
         return c;
       }},
      {"2d-beyond-threshold",
       [] {
         RunConfig c = base("2d-beyond-threshold", 2, 32);
         c.spec.params = {4, 4, 1, 1};
         c.spec.initial.u = gaussian(0.5, 1.5, {0.3, 0.35, 0.5}, 0.12);
         c.spec.initial.v = two_bump(0.3, 1.0, {0.2, 0.75, 0.5}, 0.1);
         c.spec.initial.w = cosine(0.8, 0.2);  // max w0 = 1 at the corner cell limit
         c.spec.t_end = 4.0;
         c.spec.output_stride = 200;
         c.checks = {"bounded"};
         return c;
       }},
      {"consumption-budget",
       [] {
         RunConfig c = base("consumption-budget", 2, 24);
         c.spec.params = {0.5, 0.5, 2.0, 0.5};
         c.spec.initial.u = gaussian(0.2, 2.0, {0.35, 0.4, 0.5}, 0.1);
         c.spec.initial.v = Profile::constant(0.5);
         c.spec.initial.w = cosine(1.0, 0.5);
         c.spec.initial.perturbation = 0.05;
         c.spec.t_end = 2.0;
         c.spec.output_stride = 20;
         c.checks = {"budget-closure"};
         return c;
       }},
      {"weighted-lp-tail",
       [] {
         RunConfig c = base("weighted-lp-tail", 3, 12);
         c.spec.params = {1, 1, 1, 1};
         c.spec.reg = Regularizationd::logarithmic(0.05);
         c.spec.initial.u = gaussian(0.5, 1.0, {0.3, 0.4, 0.5}, 0.15);
         c.spec.initial.v = cosine(1.0, 0.4);
         c.spec.initial.w = cosine(0.6, 0.3);
         c.spec.t_end = 4.0;
         c.spec.output_stride = 100;
         return c;
       }},
      {"eps-sweep-3d",
       [] {
         RunConfig c = base("eps-sweep-3d", 3, 10);
         c.spec.params = {1, 1, 1, 1};
         c.spec.reg = Regularizationd::logarithmic(0.1);
         c.spec.initial.u = gaussian(0.5, 2.0, {0.35, 0.4, 0.5}, 0.15);
         c.spec.initial.v = cosine(1.0, 0.5);
         c.spec.initial.w = cosine(0.7, 0.3);
         c.spec.t_end = 0.5;
         c.spec.output_stride = 50;
         return c;
       }},
      {"smooth-2d",
       [] {
         RunConfig c = base("smooth-2d", 2, 24);
         c.spec.params = {1, 1, 1, 1};
         c.spec.reg = Regularizationd::logarithmic(0.1);
         c.spec.initial.u = cosine(1.5, 0.8);
         c.spec.initial.v = gaussian(0.8, 1.0, {0.6, 0.4, 0.5}, 0.2);
         c.spec.initial.w = cosine(0.7, 0.3);
         c.spec.t_end = 0.5;
         c.spec.output_stride = 50;
         return c;
       }},
      {"smooth-1d",
       [] {
         RunConfig c = base("smooth-1d", 1, 16);
         c.spec.params = {1, 1, 1, 1};
         c.spec.initial.u = cosine(1.0, 0.5);
         c.spec.initial.v = gaussian(0.8, 0.6, {0.4, 0.5, 0.5}, 0.2);
         c.spec.initial.w = cosine(0.7, 0.3);
         c.spec.t_end = 0.05;
         c.spec.output_stride = 50;
         c.refinement_factor = 4;
         return c;
       }},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, make] : catalog()) names.push_back(name);
  return names;
}

RunConfig preset(const std::string& name) {
  const auto it = catalog().find(name);
  if (it == catalog().end()) {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; available: " + list);
  }
  return it->second();
}

}  // namespace chemotaxis_lab
