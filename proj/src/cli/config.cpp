#include "phaselock/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "phaselock/kalman_bucy.hpp"

namespace phaselock::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    // Accept integral values written in floating form, e.g. 1e3.
    const double d = parse_double(s);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
      throw std::invalid_argument("expected a non-negative integer, got '" + std::string(s) + "'");
    }
    return static_cast<std::uint64_t>(d);
  }
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<ExperimentKind> kKinds[] = {
    {ExperimentKind::ou_filter, "ou-filter"},
    {ExperimentKind::wiener_filter_freq, "wiener-filter-freq"},
    {ExperimentKind::ou_smooth, "ou-smooth"},
    {ExperimentKind::wiener_process, "wiener-process"},
    {ExperimentKind::pll, "pll"},
    {ExperimentKind::oscillator, "oscillator"},
    {ExperimentKind::sweep, "sweep"}};
constexpr EnumName<DiscriminatorMode> kModes[] = {{DiscriminatorMode::linearized, "linearized"},
                                                  {DiscriminatorMode::nonlinear, "nonlinear"},
                                                  {DiscriminatorMode::canonical, "canonical"}};
constexpr EnumName<EstimatorKind> kEstimators[] = {{EstimatorKind::kb_filter, "kb"},
                                                   {EstimatorKind::wiener_loop, "wiener"}};
constexpr EnumName<SmoothingKind> kSmoothing[] = {{SmoothingKind::none, "none"},
                                                  {SmoothingKind::post_loop, "post_loop"},
                                                  {SmoothingKind::state_variable, "state_variable"}};

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], std::string_view s) {
  s = trim(s);
  std::string allowed;
  for (const auto& e : table) {
    if (s == e.name) return e.value;
    allowed += allowed.empty() ? "" : ", ";
    allowed += e.name;
  }
  throw std::invalid_argument("expected one of " + allowed + ", got '" + std::string(s) + "'");
}

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

struct KeySpec {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

template <class T>
KeySpec double_key(std::optional<T> ExperimentConfig::*field) {
  return {[field](ExperimentConfig& c, std::string_view v) { c.*field = parse_double(v); },
          [field](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return format_double(*(c.*field));
          }};
}

KeySpec uint_key(std::optional<std::uint64_t> ExperimentConfig::*field) {
  return {[field](ExperimentConfig& c, std::string_view v) { c.*field = parse_uint(v); },
          [field](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return std::to_string(*(c.*field));
          }};
}

KeySpec bool_key(std::optional<bool> ExperimentConfig::*field) {
  return {[field](ExperimentConfig& c, std::string_view v) { c.*field = parse_bool(v); },
          [field](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return std::string(*(c.*field) ? "true" : "false");
          }};
}

template <class E, std::size_t N>
KeySpec enum_key(std::optional<E> ExperimentConfig::*field, const EnumName<E> (&table)[N]) {
  return {[field, &table](ExperimentConfig& c, std::string_view v) {
            c.*field = parse_enum(table, v);
          },
          [field, &table](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return std::string(enum_name(table, *(c.*field)));
          }};
}

const std::vector<std::pair<std::string, KeySpec>>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, KeySpec>> table = {
      {"experiment",
       {[](C& c, std::string_view v) { c.experiment = parse_enum(kKinds, v); },
        [](const C& c) -> std::optional<std::string> {
          return std::string(enum_name(kKinds, c.experiment));
        }}},
      {"k", double_key(&C::k)},
      {"kappa", double_key(&C::kappa)},
      {"beta", double_key(&C::beta)},
      {"Lambda", double_key(&C::lambda)},
      {"Z", double_key(&C::z)},
      {"N", double_key(&C::photon_number)},
      {"Q", double_key(&C::q)},
      {"mass", double_key(&C::mass)},
      {"mech_freq", double_key(&C::mech_freq)},
      {"hbar", double_key(&C::hbar)},
      {"power", double_key(&C::power)},
      {"omega0", double_key(&C::omega0)},
      {"t0", double_key(&C::t0)},
      {"dt", double_key(&C::dt)},
      {"duration", double_key(&C::duration)},
      {"duration_gamma", double_key(&C::duration_gamma)},
      {"trials", uint_key(&C::trials)},
      {"master_seed", uint_key(&C::master_seed)},
      {"mode", enum_key(&C::mode, kModes)},
      {"estimator", enum_key(&C::estimator, kEstimators)},
      {"smoothing", enum_key(&C::smoothing, kSmoothing)},
      {"sigma0", double_key(&C::sigma0)},
      {"delay", double_key(&C::delay)},
      {"slip_threshold", double_key(&C::slip_threshold)},
      {"allow_coarse_dt", bool_key(&C::allow_coarse_dt)},
      {"dump_run", bool_key(&C::dump_run)},
      {"freq_points", uint_key(&C::freq_points)},
      {"freq_min", double_key(&C::freq_min)},
      {"freq_max", double_key(&C::freq_max)},
      {"sweep_experiment", enum_key(&C::sweep_experiment, kKinds)},
      {"sweep_param",
       {[](C& c, std::string_view v) {
          const std::string key(trim(v));
          if (key == "experiment" || key.rfind("sweep_", 0) == 0 || key == "output") {
            throw std::invalid_argument("'" + key + "' cannot be swept");
          }
          const auto& t = key_table();
          if (std::none_of(t.begin(), t.end(), [&](const auto& e) { return e.first == key; })) {
            throw std::invalid_argument("unknown sweep parameter '" + key + "'");
          }
          c.sweep_param = key;
        },
        [](const C& c) { return c.sweep_param; }}},
      {"sweep_values",
       {[](C& c, std::string_view v) {
          std::vector<double> values;
          std::string_view rest = v;
          while (!rest.empty()) {
            const auto comma = rest.find(',');
            values.push_back(parse_double(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
          }
          if (values.empty()) throw std::invalid_argument("expected a comma-separated list");
          c.sweep_values = std::move(values);
        },
        [](const C& c) -> std::optional<std::string> {
          if (!c.sweep_values) return std::nullopt;
          std::string s;
          for (double v : *c.sweep_values) s += (s.empty() ? "" : ", ") + format_double(v);
          return s;
        }}},
      {"output",
       {[](C& c, std::string_view v) {
          if (trim(v).empty()) throw std::invalid_argument("empty output path");
          c.output = std::string(trim(v));
        },
        [](const C& c) { return c.output; }}},
  };
  return table;
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& [name, spec] : key_table()) {
    if (name == key) return &spec;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) { return enum_name(kKinds, kind); }

std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (const auto& e : kKinds) {
    if (s == e.name) return e.value;
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

ConfigParseError::ConfigParseError(std::vector<ConfigIssue> issues)
    : ConfigError([&] {
        std::string msg;
        for (const auto& i : issues) {
          if (!msg.empty()) msg += "\n";
          msg += i.line > 0 ? "line " + std::to_string(i.line) + ": " + i.message : i.message;
        }
        return msg;
      }()),
      issues_(std::move(issues)) {}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError("unknown key '" + std::string(key) + "'");
  try {
    spec->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, spec] : key_table()) keys.push_back(name);
  return keys;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::vector<ConfigIssue> issues;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || trim(line.substr(1, line.size() - 2)).empty()) {
        issues.push_back({line_no, "malformed section header '" + std::string(line) + "'"});
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      issues.push_back({line_no, "expected key = value, got '" + std::string(line) + "'"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (!spec) {
      issues.push_back({line_no, "unknown key '" + key + "'"});
      continue;
    }
    if (!seen.insert(key).second) {
      issues.push_back({line_no, "duplicate key '" + key + "'"});
      continue;
    }
    try {
      spec->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      issues.push_back({line_no, key + ": " + e.what()});
    }
  }
  if (!seen.count("experiment")) issues.push_back({0, "missing required key 'experiment'"});
  if (issues.empty()) {
    auto more = validate_config(cfg);
    issues.insert(issues.end(), more.begin(), more.end());
  }
  if (!issues.empty()) throw ConfigParseError(std::move(issues));
  return cfg;
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, spec] : key_table()) {
    if (auto v = spec.get(cfg)) out += name + " = " + *v + "\n";
  }
  return out;
}

LinearModel scalar_model(const ExperimentConfig& cfg) {
  const double beta = cfg.beta.value_or(1.0);
  const double kappa = cfg.kappa.value_or(0.0);
  if (cfg.photon_number) {
    if (cfg.k && *cfg.k != 0.0) throw ConfigError("N describes the Wiener process; k must be 0");
    const double z = 1.0 / (4.0 * *cfg.photon_number * kappa);
    return ou_model_normalized(0.0, kappa, beta, z);
  }
  const double k = cfg.k.value_or(0.0);
  if (cfg.z) return ou_model_normalized(k, kappa, beta, *cfg.z);
  if (cfg.lambda) {
    if (!(k > 0.0)) throw ConfigError("Lambda needs k > 0 (use N or Z when k = 0)");
    return ou_model_from_lambda(k, kappa, *cfg.lambda, beta);
  }
  throw ConfigError("one of Lambda, Z or N is required");
}

OscParams oscillator_params(const ExperimentConfig& cfg) {
  OscParams p;
  p.mass = cfg.mass.value_or(1.0);
  p.mech_freq = cfg.mech_freq.value_or(1.0);
  p.hbar = cfg.hbar.value_or(1.0);
  if (cfg.q) {
    p.q = *cfg.q;
  } else if (cfg.power && cfg.omega0) {
    PhysicalParams phys;
    phys.hbar = p.hbar;
    phys.power = *cfg.power;
    phys.omega0 = *cfg.omega0;
    phys.beta = cfg.beta.value_or(1.0);
    p = OscParams::from_physical(p.mass, p.mech_freq, phys);
  } else {
    throw ConfigError("oscillator needs Q or (power, omega0)");
  }
  p.validate();
  return p;
}

double characteristic_rate(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentKind::oscillator) {
    return 1.0 / oscillator_relaxation_time(oscillator_params(cfg));
  }
  return loop_bandwidth(scalar_model(cfg));
}

TimeGrid resolve_grid(const ExperimentConfig& cfg) {
  const double rate = characteristic_rate(cfg);
  TimeGrid g;
  g.t0 = cfg.t0.value_or(0.0);
  g.dt = cfg.dt.value_or(1.0 / (200.0 * rate));
  double duration = 0.0;
  if (cfg.duration) {
    duration = *cfg.duration;
  } else if (cfg.duration_gamma) {
    duration = *cfg.duration_gamma / rate;
  } else {
    duration = (cfg.experiment == ExperimentKind::oscillator ? 25.0 : 40.0) / rate;
  }
  const double steps = std::round(duration / g.dt);
  if (!(steps >= 1.0) || steps > 1e9) {
    throw ConfigError("duration / dt gives " + format_double(steps) + " steps");
  }
  g.steps = static_cast<std::size_t>(steps);
  return g;
}

namespace {

struct Requirement {
  const char* key;
  bool present;
};

void require(std::vector<ConfigIssue>& issues, ExperimentKind kind,
             std::initializer_list<Requirement> reqs) {
  for (const auto& r : reqs) {
    if (!r.present) {
      issues.push_back({0, "missing required key '" + std::string(r.key) + "' for experiment " +
                               std::string(to_string(kind))});
    }
  }
}

void positive(std::vector<ConfigIssue>& issues, const char* key, const std::optional<double>& v,
              bool allow_zero = false) {
  if (v && !(allow_zero ? *v >= 0.0 : *v > 0.0)) {
    issues.push_back({0, std::string(key) + " must be " + (allow_zero ? ">= 0" : "> 0")});
  }
}

void validate_kind(const ExperimentConfig& cfg, ExperimentKind kind,
                   std::vector<ConfigIssue>& issues) {
  const bool strength = cfg.lambda || cfg.z;
  switch (kind) {
    case ExperimentKind::ou_filter:
    case ExperimentKind::ou_smooth:
      require(issues, kind,
              {{"k", cfg.k.has_value()}, {"kappa", cfg.kappa.has_value()},
               {"Lambda", strength}, {"trials", cfg.trials.has_value()},
               {"master_seed", cfg.master_seed.has_value()}});
      if (cfg.k && *cfg.k == 0.0) issues.push_back({0, "k must be > 0 for an OU experiment"});
      break;
    case ExperimentKind::wiener_filter_freq:
      require(issues, kind,
              {{"kappa", cfg.kappa.has_value()},
               {"Lambda", strength || cfg.photon_number.has_value()}});
      if (!cfg.photon_number) require(issues, kind, {{"k", cfg.k.has_value()}});
      break;
    case ExperimentKind::wiener_process:
      require(issues, kind,
              {{"kappa", cfg.kappa.has_value()}, {"N", cfg.photon_number.has_value()},
               {"trials", cfg.trials.has_value()}, {"master_seed", cfg.master_seed.has_value()}});
      break;
    case ExperimentKind::pll:
      require(issues, kind,
              {{"kappa", cfg.kappa.has_value()},
               {"Lambda", strength || cfg.photon_number.has_value()},
               {"trials", cfg.trials.has_value()}, {"master_seed", cfg.master_seed.has_value()}});
      if (!cfg.photon_number) require(issues, kind, {{"k", cfg.k.has_value()}});
      break;
    case ExperimentKind::oscillator:
      require(issues, kind, {{"Q", cfg.q || (cfg.power && cfg.omega0)}});
      if (cfg.trials && *cfg.trials > 0) {
        require(issues, kind, {{"master_seed", cfg.master_seed.has_value()}});
      }
      break;
    case ExperimentKind::sweep:
      break;
  }
}

bool simulates(const ExperimentConfig& cfg, ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::wiener_filter_freq:
      return false;
    case ExperimentKind::oscillator:
      return cfg.trials.value_or(0) > 0;
    default:
      return true;
  }
}

}  // namespace

std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg) {
  std::vector<ConfigIssue> issues;
  positive(issues, "k", cfg.k, true);
  positive(issues, "kappa", cfg.kappa, true);
  positive(issues, "beta", cfg.beta);
  positive(issues, "Lambda", cfg.lambda);
  positive(issues, "Z", cfg.z);
  positive(issues, "N", cfg.photon_number);
  positive(issues, "Q", cfg.q, true);
  positive(issues, "mass", cfg.mass);
  positive(issues, "mech_freq", cfg.mech_freq);
  positive(issues, "hbar", cfg.hbar);
  positive(issues, "power", cfg.power);
  positive(issues, "omega0", cfg.omega0);
  positive(issues, "dt", cfg.dt);
  positive(issues, "duration", cfg.duration);
  positive(issues, "duration_gamma", cfg.duration_gamma);
  positive(issues, "sigma0", cfg.sigma0, true);
  positive(issues, "delay", cfg.delay, true);
  positive(issues, "slip_threshold", cfg.slip_threshold);
  positive(issues, "freq_min", cfg.freq_min);
  positive(issues, "freq_max", cfg.freq_max);
  if (cfg.freq_min && cfg.freq_max && !(*cfg.freq_min < *cfg.freq_max)) {
    issues.push_back({0, "freq_min must be below freq_max"});
  }
  if (cfg.freq_points && *cfg.freq_points < 2) issues.push_back({0, "freq_points must be >= 2"});
  if (cfg.lambda && cfg.z) issues.push_back({0, "give either Lambda or Z, not both"});
  if (cfg.duration && cfg.duration_gamma) {
    issues.push_back({0, "give either duration or duration_gamma, not both"});
  }
  if (cfg.photon_number && cfg.k && *cfg.k != 0.0) {
    issues.push_back({0, "N describes the Wiener process; k must be 0 or absent"});
  }

  ExperimentConfig effective = cfg;
  ExperimentKind kind = cfg.experiment;
  if (kind == ExperimentKind::sweep) {
    require(issues, kind,
            {{"sweep_param", cfg.sweep_param.has_value()},
             {"sweep_values", cfg.sweep_values.has_value()}});
    kind = cfg.sweep_experiment.value_or(ExperimentKind::oscillator);
    if (kind == ExperimentKind::sweep) {
      issues.push_back({0, "sweep_experiment cannot itself be sweep"});
      return issues;
    }
    effective.experiment = kind;
    if (cfg.sweep_param && cfg.sweep_values) {
      for (double v : *cfg.sweep_values) {
        ExperimentConfig probe = effective;
        try {
          set_config_value(probe, *cfg.sweep_param, format_double(v));
        } catch (const ConfigError& e) {
          issues.push_back({0, "sweep value " + format_double(v) + ": " + e.what()});
        }
      }
      try {
        set_config_value(effective, *cfg.sweep_param, format_double(cfg.sweep_values->front()));
      } catch (const ConfigError&) {
      }
    }
  }
  if (cfg.trials && *cfg.trials < 2 &&
      !(kind == ExperimentKind::oscillator && *cfg.trials == 0)) {
    issues.push_back({0, "trials must be >= 2"});
  }

  const std::size_t before = issues.size();
  validate_kind(effective, kind, issues);
  if (issues.size() != before) return issues;
  if (!issues.empty()) return issues;

  try {
    if (simulates(effective, kind) || effective.dt) {
      const double rate = characteristic_rate(effective);
      const TimeGrid grid = resolve_grid(effective);
      if (grid.dt * rate >= 0.02 && !effective.allow_coarse_dt.value_or(false)) {
        issues.push_back({0, "dt * gamma = " + format_double(grid.dt * rate) +
                                 " must be < 0.02 (gamma = " + format_double(rate) +
                                 "); set allow_coarse_dt = true to override"});
      }
    } else {
      characteristic_rate(effective);
    }
  } catch (const std::exception& e) {
    issues.push_back({0, e.what()});
  }
  return issues;
}

}  // namespace phaselock::cli
