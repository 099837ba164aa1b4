#include "byzlab/io/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace byzlab {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidConfig("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw InvalidConfig("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& where, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!it->is_number_integer()) throw InvalidConfig("");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0))
        throw InvalidConfig("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw InvalidConfig("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw InvalidConfig("");
    } else {
      if (!it->is_string()) throw InvalidConfig("");
    }
    return it->template get<T>();
  } catch (const std::exception&) {
    throw InvalidConfig("config: key '" + where + "." + key + "' has the wrong type");
  }
}

std::string param_text(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_float()) return format_number(v.get<double>());
  throw InvalidConfig("config: key '" + where + "' must be a string, number or boolean");
}

json param_value(const std::string& text) {
  long long i = 0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), i);
  if (r.ec == std::errc() && r.ptr == text.data() + text.size()) return i;
  double d = 0.0;
  r = std::from_chars(text.data(), text.data() + text.size(), d);
  if (r.ec == std::errc() && r.ptr == text.data() + text.size()) return d;
  return text;
}

ParamMap params_of(const json& obj, const std::string& where, const std::set<std::string>& skip) {
  ParamMap out;
  for (const auto& [key, value] : obj.items())
    if (!skip.count(key)) out[key] = param_text(value, where + "." + key);
  return out;
}

AggregatorConfig parse_aggregator(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw InvalidConfig("config: '" + where + "' must be an object");
  const std::string name = get_field<std::string>(obj, "name", where, "");
  if (name.empty()) throw InvalidConfig("config: key '" + where + ".name' is required");
  try {
    if (name == "mixtailor") {
      reject_unknown_keys(obj, {"name", "menu"}, where);
      MixTailor mt;
      const auto it = obj.find("menu");
      if (it == obj.end()) return parse_aggregator_spec("mixtailor");
      if (!it->is_array()) throw InvalidConfig("config: key '" + where + ".menu' must be an array");
      for (std::size_t i = 0; i < it->size(); ++i)
        mt.menu.push_back(parse_aggregator((*it)[i], where + ".menu[" + std::to_string(i) + "]"));
      AggregatorConfig cfg{mt};
      validate(cfg);
      return cfg;
    }
    return make_aggregator(name, params_of(obj, where, {"name"}));
  } catch (const InvalidConfig& e) {
    const std::string msg = e.what();
    if (msg.rfind("config:", 0) == 0) throw;
    throw InvalidConfig("config: " + where + ": " + msg);
  }
}

json aggregator_json(const AggregatorConfig& cfg) {
  json out = json::object();
  out["name"] = aggregator_name(cfg);
  if (const auto* mt = std::get_if<MixTailor>(&cfg.kind)) {
    out["menu"] = json::array();
    for (const auto& m : mt->menu) out["menu"].push_back(aggregator_json(m));
    return out;
  }
  for (const auto& [k, v] : aggregator_params(cfg)) out[k] = param_value(v);
  return out;
}

json attack_json(const AttackConfig& cfg) {
  json out = json::object();
  out["name"] = attack_name(cfg);
  for (const auto& [k, v] : attack_params(cfg)) out[k] = k == "sign" ? json(v) : param_value(v);
  return out;
}

WeightRule parse_rule(const std::string& s) {
  if (s == "metropolis") return WeightRule::Metropolis;
  if (s == "uniform") return WeightRule::Uniform;
  throw InvalidConfig("config: key 'topology.rule' must be 'metropolis' or 'uniform'");
}

json config_object(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  json out;
  out["topology"] = {{"K", e.topology.agents},
                     {"edge_prob", e.topology.edge_prob},
                     {"epsilon", e.topology.epsilon},
                     {"rule", weight_rule_name(e.topology.rule)},
                     {"seed", e.topology.seed},
                     {"max_local_epsilon", e.topology.max_local_epsilon},
                     {"max_retries", e.topology.max_retries}};
  out["task"] = {{"r", e.task.dim},
                 {"sigma_v2", e.task.sigma_v2},
                 {"mu", e.task.mu},
                 {"iterations", e.task.iterations},
                 {"huber_delta", e.task.huber_delta},
                 {"shift", e.task.shift}};
  out["aggregator"] = aggregator_json(e.aggregator);
  out["attack"] = attack_json(e.attack);
  out["output"] = {{"dir", cfg.output.dir}, {"per_agent", cfg.output.per_agent}, {"clip_2d", cfg.output.clip_2d}};
  return out;
}

}  // namespace

std::string weight_rule_name(WeightRule rule) { return rule == WeightRule::Uniform ? "uniform" : "metropolis"; }

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("config: malformed JSON: ") + e.what());
  }
  reject_unknown_keys(doc, {"topology", "task", "aggregator", "attack", "output", "run"}, "");

  RunConfig cfg;
  ExperimentConfig& e = cfg.experiment;
  if (const auto it = doc.find("topology"); it != doc.end()) {
    const json& t = *it;
    reject_unknown_keys(t, {"K", "edge_prob", "epsilon", "rule", "seed", "max_local_epsilon", "max_retries"},
                        "topology");
    e.topology.agents = get_field<int>(t, "K", "topology", e.topology.agents);
    e.topology.edge_prob = get_field<double>(t, "edge_prob", "topology", e.topology.edge_prob);
    e.topology.epsilon = get_field<double>(t, "epsilon", "topology", e.topology.epsilon);
    e.topology.rule = parse_rule(get_field<std::string>(t, "rule", "topology", weight_rule_name(e.topology.rule)));
    e.topology.seed = get_field<std::uint64_t>(t, "seed", "topology", e.topology.seed);
    e.topology.max_local_epsilon =
        get_field<double>(t, "max_local_epsilon", "topology", e.topology.max_local_epsilon);
    e.topology.max_retries = get_field<int>(t, "max_retries", "topology", e.topology.max_retries);
  }
  if (const auto it = doc.find("task"); it != doc.end()) {
    const json& t = *it;
    reject_unknown_keys(t, {"r", "sigma_v2", "mu", "iterations", "huber_delta", "shift"}, "task");
    e.task.dim = get_field<int>(t, "r", "task", e.task.dim);
    e.task.sigma_v2 = get_field<double>(t, "sigma_v2", "task", e.task.sigma_v2);
    e.task.mu = get_field<double>(t, "mu", "task", e.task.mu);
    e.task.iterations = get_field<int>(t, "iterations", "task", e.task.iterations);
    e.task.huber_delta = get_field<double>(t, "huber_delta", "task", e.task.huber_delta);
    e.task.shift = get_field<double>(t, "shift", "task", e.task.shift);
  }
  if (const auto it = doc.find("aggregator"); it != doc.end()) e.aggregator = parse_aggregator(*it, "aggregator");
  if (const auto it = doc.find("attack"); it != doc.end()) {
    const json& a = *it;
    if (!a.is_object()) throw InvalidConfig("config: 'attack' must be an object");
    const std::string name = get_field<std::string>(a, "name", "attack", "");
    if (name.empty()) throw InvalidConfig("config: key 'attack.name' is required");
    try {
      e.attack = make_attack(name, params_of(a, "attack", {"name"}));
    } catch (const InvalidConfig& err) {
      throw InvalidConfig(std::string("config: attack: ") + err.what());
    }
  }
  if (const auto it = doc.find("output"); it != doc.end()) {
    const json& o = *it;
    reject_unknown_keys(o, {"dir", "per_agent", "clip_2d"}, "output");
    cfg.output.dir = get_field<std::string>(o, "dir", "output", cfg.output.dir);
    cfg.output.per_agent = get_field<bool>(o, "per_agent", "output", cfg.output.per_agent);
    cfg.output.clip_2d = get_field<bool>(o, "clip_2d", "output", cfg.output.clip_2d);
  }
  e.per_agent = cfg.output.per_agent;

  try {
    e.topology.validate();
    e.task.validate();
  } catch (const InvalidConfig& err) {
    throw InvalidConfig(std::string("config: ") + err.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string config_json(const RunConfig& cfg) { return config_object(cfg).dump(2) + "\n"; }

std::string metadata_json(const RunConfig& cfg, const RunTrace& trace) {
  json out = config_object(cfg);
  json flags = json::array();
  for (Flag f : {Flag::NonConverged, Flag::DegenerateAggregation, Flag::ZeroScale, Flag::ConstraintInfeasible})
    if (trace.flags.has(f)) flags.push_back(flag_name(f));
  std::vector<double> w_opt(trace.w_opt.data(), trace.w_opt.data() + trace.w_opt.size());
  out["run"] = {{"version", BYZLAB_VERSION},
                {"seed", cfg.experiment.topology.seed},
                {"topology_attempts", trace.topology_attempts},
                {"max_local_epsilon", trace.max_local_epsilon},
                {"byzantine", trace.byzantine},
                {"honest_count", trace.honest.size()},
                {"iterations_recorded", trace.mean_dist_sq.size()},
                {"diverged", trace.diverged},
                {"diverged_at", trace.diverged_at},
                {"flags", flags},
                {"w_opt", w_opt},
                {"initial_iterate", cfg.experiment.task.shift}};
  return out.dump(2) + "\n";
}

}  // namespace byzlab
