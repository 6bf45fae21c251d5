#include "pasta/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_plain(std::string_view text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, t));
  }
  return v;
}

std::int64_t parse_int(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, t));
  }
  return v;
}

std::uint64_t parse_uint(const std::string& text, const std::string& key) {
  const std::int64_t v = parse_int(text, key);
  if (v < 0) throw ConfigError(fmt::format("{}: expected a non-negative integer, got {}", key, v));
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, t));
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }
std::string fmt_num(double v) { return fmt::format("{}", v); }

std::string fmt_pref(const std::vector<double>& p) {
  if (p.empty()) return "uniform";
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) out += (i ? "," : "") + fmt_num(p[i]);
  return out;
}

struct KeySpec {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Registry in serialization order.
const std::vector<std::pair<std::string, KeySpec>>& registry() {
  static const std::vector<std::pair<std::string, KeySpec>> keys = [] {
    std::vector<std::pair<std::string, KeySpec>> r;
    auto num = [&r](const std::string& key, auto member) {
      r.push_back({key,
                   {[member](RunConfig& c, const std::string& v, const std::string& k) {
                      member(c) = parse_number(v, k);
                    },
                    [member](const RunConfig& c) { return fmt_num(member(const_cast<RunConfig&>(c))); }}});
    };
    auto flag = [&r](const std::string& key, auto member) {
      r.push_back({key,
                   {[member](RunConfig& c, const std::string& v, const std::string& k) {
                      member(c) = parse_bool(v, k);
                    },
                    [member](const RunConfig& c) { return fmt_bool(member(const_cast<RunConfig&>(c))); }}});
    };
    auto integer = [&r](const std::string& key, auto member) {
      r.push_back({key,
                   {[member](RunConfig& c, const std::string& v, const std::string& k) {
                      using T = std::remove_reference_t<decltype(member(c))>;
                      if constexpr (std::is_signed_v<T>) {
                        member(c) = static_cast<T>(parse_int(v, k));
                      } else {
                        member(c) = static_cast<T>(parse_uint(v, k));
                      }
                    },
                    [member](const RunConfig& c) {
                      return std::to_string(member(const_cast<RunConfig&>(c)));
                    }}});
    };
    auto text = [&r](const std::string& key, auto member) {
      r.push_back({key,
                   {[member](RunConfig& c, const std::string& v, const std::string&) { member(c) = trim(v); },
                    [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }}});
    };

    integer("run.iterations", [](RunConfig& c) -> auto& { return c.train.iterations; });
    integer("run.seed", [](RunConfig& c) -> auto& { return c.train.seed; });
    r.push_back({"run.preference",
                 {[](RunConfig& c, const std::string& v, const std::string&) {
                    c.train.preference = trim(v) == "uniform" ? std::vector<double>{} : parse_preference(v);
                  },
                  [](const RunConfig& c) { return fmt_pref(c.train.preference); }}});

    text("environment.name", [](RunConfig& c) -> auto& { return c.train.environment.name; });
    integer("environment.max_steps", [](RunConfig& c) -> auto& { return c.train.environment.max_steps; });
    integer("environment.stub_objectives", [](RunConfig& c) -> auto& { return c.train.environment.stub_objectives; });
    integer("environment.stealth_targets", [](RunConfig& c) -> auto& { return c.train.environment.stealth_targets; });
    integer("environment.stealth_circles", [](RunConfig& c) -> auto& { return c.train.environment.stealth_circles; });
    integer("environment.stealth_rectangles",
            [](RunConfig& c) -> auto& { return c.train.environment.stealth_rectangles; });
    num("environment.stealth_safe_fraction",
        [](RunConfig& c) -> auto& { return c.train.environment.stealth_safe_fraction; });

    r.push_back({"algorithm.name",
                 {[](RunConfig& c, const std::string& v, const std::string&) {
                    c.train.algorithm = algorithm_from_string(trim(v));
                  },
                  [](const RunConfig& c) { return to_string(c.train.algorithm); }}});
    num("algorithm.mu_fixed", [](RunConfig& c) -> auto& { return c.train.mu_fixed; });
    num("algorithm.zeta", [](RunConfig& c) -> auto& { return c.train.zeta; });
    num("algorithm.rho", [](RunConfig& c) -> auto& { return c.train.rho; });
    r.push_back({"algorithm.pcgrad",
                 {[](RunConfig& c, const std::string& v, const std::string& k) {
                    c.train.no_pcgrad = !parse_bool(v, k);
                  },
                  [](const RunConfig& c) { return fmt_bool(!c.train.no_pcgrad); }}});
    flag("algorithm.weighted_pcgrad", [](RunConfig& c) -> auto& { return c.train.weighted_pcgrad; });
    r.push_back({"algorithm.critic",
                 {[](RunConfig& c, const std::string& v, const std::string& k) {
                    const std::string t = trim(v);
                    if (t == "branched") {
                      c.train.critic = CriticArch::kBranched;
                    } else if (t == "shared") {
                      c.train.critic = CriticArch::kShared;
                    } else {
                      throw ConfigError(fmt::format("{}: expected branched or shared, got '{}'", k, t));
                    }
                  },
                  [](const RunConfig& c) {
                    return std::string(c.train.critic == CriticArch::kShared ? "shared" : "branched");
                  }}});
    flag("algorithm.critic_weighted", [](RunConfig& c) -> auto& { return c.train.critic_weighted; });
    auto only = [&r](const std::string& key, const std::string& value) {
      r.push_back({key,
                   {[value](RunConfig&, const std::string& v, const std::string& k) {
                      if (trim(v) != value) {
                        throw ConfigError(fmt::format("{}: only '{}' is supported, got '{}'", k, value, trim(v)));
                      }
                    },
                    [value](const RunConfig&) { return value; }}});
    };
    only("algorithm.pair_sampling", "all");
    only("algorithm.tch_selection", "per_iteration");

    num("controller.mu_start", [](RunConfig& c) -> auto& { return c.train.mu_start; });
    num("controller.mu_min", [](RunConfig& c) -> auto& { return c.train.mu_min; });
    num("controller.mu_max", [](RunConfig& c) -> auto& { return c.train.mu_max; });
    num("controller.tau", [](RunConfig& c) -> auto& { return c.train.tau; });
    num("controller.lambda_ema", [](RunConfig& c) -> auto& { return c.train.lambda_ema; });
    flag("controller.decay", [](RunConfig& c) -> auto& { return c.train.controller_decay; });
    flag("controller.braking", [](RunConfig& c) -> auto& { return c.train.controller_braking; });

    integer("ppo.horizon", [](RunConfig& c) -> auto& { return c.train.horizon; });
    integer("ppo.epochs", [](RunConfig& c) -> auto& { return c.train.epochs; });
    integer("ppo.minibatch", [](RunConfig& c) -> auto& { return c.train.minibatch; });
    num("ppo.clip_eps", [](RunConfig& c) -> auto& { return c.train.clip_eps; });
    num("ppo.c1", [](RunConfig& c) -> auto& { return c.train.c1; });
    num("ppo.c2", [](RunConfig& c) -> auto& { return c.train.c2; });
    num("ppo.gamma", [](RunConfig& c) -> auto& { return c.train.gamma; });
    num("ppo.lambda_gae", [](RunConfig& c) -> auto& { return c.train.lambda_gae; });
    num("ppo.learning_rate", [](RunConfig& c) -> auto& { return c.train.learning_rate; });
    integer("ppo.hidden", [](RunConfig& c) -> auto& { return c.train.hidden; });

    text("output.dir", [](RunConfig& c) -> auto& { return c.out_dir; });
    text("output.label", [](RunConfig& c) -> auto& { return c.label; });
    integer("output.eval_interval", [](RunConfig& c) -> auto& { return c.train.eval_interval; });
    integer("output.eval_episodes", [](RunConfig& c) -> auto& { return c.train.eval_episodes; });
    integer("output.checkpoint_interval", [](RunConfig& c) -> auto& { return c.checkpoint_interval; });
    return r;
  }();
  return keys;
}

const KeySpec& find_key(const std::string& key) {
  for (const auto& [name, spec] : registry()) {
    if (name == key) return spec;
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

}  // namespace

double parse_number(std::string_view text, const std::string& key) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  double v = 0.0;
  if (slash == std::string::npos) {
    v = parse_plain(t, key);
  } else {
    const double den = parse_plain(std::string_view(t).substr(slash + 1), key);
    if (den == 0.0) throw ConfigError(fmt::format("{}: zero denominator in '{}'", key, t));
    v = parse_plain(std::string_view(t).substr(0, slash), key) / den;
  }
  if (!std::isfinite(v)) throw ConfigError(fmt::format("{}: '{}' is not finite", key, t));
  return v;
}

std::vector<double> parse_preference(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_number(piece, "run.preference"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  PreferenceVector{out};  // simplex check
  return out;
}

std::vector<std::vector<double>> stealth_preferences() {
  return {{0.1, 0.7, 0.2}, {0.2, 0.2, 0.6}, {0.2, 0.6, 0.2}, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
          {0.4, 0.4, 0.2}, {0.5, 0.3, 0.2}, {0.6, 0.3, 0.1}, {0.8, 0.1, 0.1}};
}

void RunConfig::validate() const {
  train.validate();
  if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
  if (checkpoint_interval < 0) throw ConfigError("output.checkpoint_interval must be >= 0");
  if (label.find_first_of(",\n") != std::string::npos) throw ConfigError("output.label must not contain commas");
  if (!train.preference.empty()) {
    const std::size_t m = make_environment(train.environment)->objective_count();
    if (train.preference.size() != m) {
      throw ConfigError(fmt::format("run.preference has {} weights but environment '{}' has {} objectives",
                                    train.preference.size(), train.environment.name, m));
    }
  }
}

std::string RunConfig::method_label() const {
  if (!label.empty()) return label;
  std::string s = to_string(train.algorithm);
  if (train.algorithm == Algorithm::kFixedStch) s += fmt::format("_mu{}", train.mu_fixed);
  return s;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [name, spec] : registry()) out.push_back(name);
  return out;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, value, key);
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return find_key(key).get(config); }

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(fmt::format("override '{}' must look like section.key=value", assignment));
  }
  set_config_value(config, trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: line {}: {}", source, e.line(), e.message()));
  }
  RunConfig config;
  std::vector<std::string> unknown;
  std::vector<std::pair<std::string, std::string>> assignments;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      unknown.push_back(section);  // key outside any section
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto& keys = registry();
      if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == full; })) {
        unknown.push_back(full);
      } else {
        assignments.emplace_back(full, value.data());
      }
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw ConfigError(fmt::format("{}: unknown config keys: {}", source, list));
  }
  for (const auto& [key, value] : assignments) set_config_value(config, key, value);
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::string serialize_run_config(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [name, spec] : registry()) {
    const auto dot = name.find('.');
    const std::string sec = name.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + fmt::format("[{}]\n", sec);
      section = sec;
    }
    out += fmt::format("{} = {}\n", name.substr(dot + 1), spec.get(config));
  }
  return out;
}

}  // namespace pasta
