#pragma once

// JSON input and output: graphs, signal models, scenarios and reports.
// Agents are 1-based in every file.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "byzlearn/sim.hpp"

namespace byzlearn::io {

using Json = nlohmann::ordered_json;

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

inline Json load_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw InputError(what + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

inline std::size_t get_count(const Json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw InputError(what + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline double get_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(what + ": expected a finite number");
  return v;
}

inline AgentId agent_from_json(const Json& j, std::size_t n, const std::string& what) {
  const std::size_t id = get_count(j, what);
  if (id < 1 || id > n) throw InputError(what + ": agent " + std::to_string(id) + " not in 1.." + std::to_string(n));
  return id - 1;
}

inline Hypothesis hypothesis_from_json(const Json& j, const std::vector<std::string>& labels,
                                       const std::string& what) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    for (Hypothesis h = 0; h < labels.size(); ++h)
      if (labels[h] == name) return h;
    throw InputError(what + ": unknown hypothesis '" + name + "'");
  }
  const std::size_t index = get_count(j, what);
  if (index < 1 || index > labels.size())
    throw InputError(what + ": hypothesis index " + std::to_string(index) + " not in 1.." +
                     std::to_string(labels.size()));
  return index - 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graphs

inline Digraph graph_from_json(const Json& j) {
  const std::string what = "graph";
  const std::size_t n = detail::get_count(detail::require(j, "n", what), what + ".n");
  if (n == 0) throw InputError("graph.n must be positive");
  Digraph g(n);
  const Json& edges = detail::require(j, "edges", what);
  if (!edges.is_array()) throw InputError("graph.edges must be an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string where = "graph.edges[" + std::to_string(k) + "]";
    const Json& e = edges[k];
    if (!e.is_array() || e.size() != 2) throw InputError(where + ": expected [from, to]");
    g.add_edge(detail::agent_from_json(e[0], n, where), detail::agent_from_json(e[1], n, where));
  }
  return g;
}

inline Json graph_to_json(const Digraph& g) {
  Json edges = Json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u + 1, v + 1});
  return Json{{"n", g.size()}, {"edges", std::move(edges)}};
}

inline Digraph load_graph(const std::filesystem::path& path) {
  try {
    return graph_from_json(load_json(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Signal models

inline SignalModel model_from_json(const Json& j) {
  const std::string what = "model";
  const auto labels = detail::get<std::vector<std::string>>(detail::require(j, "hypotheses", what),
                                                            "model.hypotheses");
  const Json& agents = detail::require(j, "agents", what);
  if (!agents.is_array()) throw InputError("model.agents must be an array");
  std::vector<std::vector<std::vector<double>>> tables;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "model.agents[" + std::to_string(i) + "]";
    const Json& a = agents[i];
    const auto rows = detail::get<std::vector<std::vector<double>>>(detail::require(a, "likelihoods", where),
                                                                     where + ".likelihoods");
    if (a.contains("signals") && detail::get_count(a.at("signals"), where + ".signals") != rows.size())
      throw InputError(where + ": 'signals' is " + a.at("signals").dump() + " but likelihoods has " +
                       std::to_string(rows.size()) + " rows");
    tables.push_back(rows);
  }
  return SignalModel(labels, tables);
}

inline Json model_to_json(const SignalModel& model) {
  Json agents = Json::array();
  for (AgentId i = 0; i < model.agent_count(); ++i) {
    Json rows = Json::array();
    for (std::size_t w = 0; w < model.signal_count(i); ++w) {
      Json row = Json::array();
      for (Hypothesis h = 0; h < model.hypothesis_count(); ++h) row.push_back(model.likelihood(i, w, h));
      rows.push_back(std::move(row));
    }
    agents.push_back({{"signals", model.signal_count(i)}, {"likelihoods", std::move(rows)}});
  }
  return Json{{"hypotheses", model.hypotheses()}, {"agents", std::move(agents)}};
}

inline SignalModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(load_json(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Scenarios

inline StrategySpec strategy_from_json(const Json& j, const std::vector<std::string>& labels) {
  StrategySpec spec;
  const std::string what = "adversary.strategy";
  if (j.is_string()) {
    spec.kind = parse_strategy_kind(j.get<std::string>());
    return spec;
  }
  spec.kind = parse_strategy_kind(detail::get<std::string>(detail::require(j, "kind", what), what + ".kind"));
  if (!j.contains("params")) return spec;
  const Json& p = j.at("params");
  if (!p.is_object()) throw InputError(what + ".params must be an object");
  for (const auto& [key, value] : p.items()) {
    const std::string where = what + ".params." + key;
    if (key == "value")
      spec.value = detail::get_number(value, where);
    else if (key == "scale")
      spec.scale = detail::get_number(value, where);
    else if (key == "factor")
      spec.factor = detail::get_number(value, where);
    else if (key == "target")
      spec.target = detail::hypothesis_from_json(value, labels, where);
    else
      throw InputError(where + ": unknown parameter");
  }
  return spec;
}

inline Json strategy_to_json(const StrategySpec& spec, const std::vector<std::string>& labels) {
  Json params = Json::object();
  switch (spec.kind) {
    case StrategyKind::fixed: params["value"] = spec.value; break;
    case StrategyKind::random: params["scale"] = spec.scale; break;
    case StrategyKind::extreme:
    case StrategyKind::split_brain: params["factor"] = spec.factor; break;
    default: break;
  }
  if (spec.target) params["target"] = labels.at(*spec.target);
  return Json{{"kind", to_string(spec.kind)}, {"params", std::move(params)}};
}

inline Digraph graph_spec_from_json(const Json& j, const std::filesystem::path& base) {
  if (j.is_string()) return load_graph(base / j.get<std::string>());
  if (j.is_object() && j.contains("complete"))
    return Digraph::complete(detail::get_count(j.at("complete"), "graph.complete"));
  if (j.is_object() && j.contains("cycle")) return Digraph::cycle(detail::get_count(j.at("cycle"), "graph.cycle"));
  return graph_from_json(j);
}

inline SignalModel model_spec_from_json(const Json& j, const std::filesystem::path& base) {
  if (j.is_string()) return load_model(base / j.get<std::string>());
  return model_from_json(j);
}

/// `base` resolves relative graph/model paths.
inline ScenarioConfig scenario_from_json(const Json& j, const std::filesystem::path& base = {}) {
  const std::string what = "scenario";
  ScenarioConfig c;
  c.graph = graph_spec_from_json(detail::require(j, "graph", what), base);
  c.model = model_spec_from_json(detail::require(j, "model", what), base);
  const auto& labels = c.model.hypotheses();
  c.rule = parse_rule(detail::get<std::string>(detail::require(j, "rule", what), "scenario.rule"));
  c.theta_star = detail::hypothesis_from_json(detail::require(j, "theta_star", what), labels, "scenario.theta_star");
  if (j.contains("f")) c.f = detail::get_count(j.at("f"), "scenario.f");
  if (j.contains("rounds")) c.rounds = detail::get_count(j.at("rounds"), "scenario.rounds");
  if (j.contains("seed")) c.seed = detail::get<std::uint64_t>(j.at("seed"), "scenario.seed");
  if (j.contains("threshold")) c.threshold = detail::get_number(j.at("threshold"), "scenario.threshold");
  if (j.contains("belief_decision"))
    c.belief_decision = detail::get_number(j.at("belief_decision"), "scenario.belief_decision");
  if (j.contains("max_inputs")) c.max_inputs = detail::get_count(j.at("max_inputs"), "scenario.max_inputs");
  if (j.contains("enumeration_cap"))
    c.enumeration_cap = detail::get<std::uint64_t>(j.at("enumeration_cap"), "scenario.enumeration_cap");
  if (j.contains("check_samples"))
    c.check_samples = detail::get<std::uint64_t>(j.at("check_samples"), "scenario.check_samples");
  if (j.contains("output")) {
    const Json& o = j.at("output");
    if (o.contains("trace")) c.output.trace = detail::get<bool>(o.at("trace"), "scenario.output.trace");
    if (o.contains("summary")) c.output.summary = detail::get<bool>(o.at("summary"), "scenario.output.summary");
  }
  if (j.contains("adversary")) {
    const Json& a = j.at("adversary");
    if (a.contains("faulty")) {
      const Json& fj = a.at("faulty");
      if (fj.is_string()) {
        const auto text = fj.get<std::string>();
        if (text.rfind("random:", 0) != 0) throw InputError("adversary.faulty: expected a list or \"random:k\"");
        try {
          std::size_t used = 0;
          const auto k = std::stoull(text.substr(7), &used);
          if (used != text.size() - 7) throw std::invalid_argument(text);
          c.adversary.random_count = static_cast<std::size_t>(k);
        } catch (const std::logic_error&) {
          throw InputError("adversary.faulty: bad count in '" + text + "'");
        }
      } else {
        if (!fj.is_array()) throw InputError("adversary.faulty: expected a list or \"random:k\"");
        for (std::size_t k = 0; k < fj.size(); ++k)
          c.adversary.faulty.push_back(
              detail::agent_from_json(fj[k], c.graph.size(), "adversary.faulty[" + std::to_string(k) + "]"));
      }
    }
    if (a.contains("strategy")) c.adversary.strategy = strategy_from_json(a.at("strategy"), labels);
  }
  c.validate();
  return c;
}

inline Json scenario_to_json(const ScenarioConfig& c) {
  const auto& labels = c.model.hypotheses();
  Json faulty;
  if (c.adversary.random_count) {
    faulty = "random:" + std::to_string(*c.adversary.random_count);
  } else {
    faulty = Json::array();
    for (AgentId v : c.adversary.faulty) faulty.push_back(v + 1);
  }
  return Json{{"graph", graph_to_json(c.graph)},
              {"model", model_to_json(c.model)},
              {"rule", to_string(c.rule)},
              {"f", c.f},
              {"theta_star", labels.at(c.theta_star)},
              {"rounds", c.rounds},
              {"seed", c.seed},
              {"threshold", c.threshold},
              {"belief_decision", c.belief_decision},
              {"max_inputs", c.max_inputs},
              {"enumeration_cap", c.enumeration_cap},
              {"check_samples", c.check_samples},
              {"adversary", {{"faulty", faulty}, {"strategy", strategy_to_json(c.adversary.strategy, labels)}}},
              {"output", {{"trace", c.output.trace}, {"summary", c.output.summary}}}};
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  try {
    return scenario_from_json(load_json(path), path.parent_path());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports

inline Json agents_to_json(const NodeSet& nodes) {
  Json out = Json::array();
  for (AgentId v : nodes) out.push_back(v + 1);
  return out;
}

inline Json reduced_graph_to_json(const ReducedGraph& h) {
  Json removed = Json::array();
  for (AgentId v = 0; v < h.base_size; ++v)
    for (AgentId u : h.removed[v]) removed.push_back({u + 1, v + 1});
  return Json{{"faulty", agents_to_json(h.faulty)}, {"removed", std::move(removed)}, {"description", describe(h)}};
}

inline Json topology_to_json(const TopologyReport& r, std::size_t f, std::size_t m) {
  Json witness = nullptr;
  if (r.witness) {
    witness = reduced_graph_to_json(*r.witness);
    Json sources = Json::array();
    for (const auto& s : r.witness_sources) sources.push_back(agents_to_json(s));
    witness["sources"] = std::move(sources);
  }
  return Json{{"assumption_holds", r.assumption_holds},
              {"chi", r.chi},
              {"gamma", r.gamma},
              {"witness", std::move(witness)},
              {"f", f},
              {"dim", m},
              {"exhaustive", r.exhaustive},
              {"examined", r.examined}};
}

inline Json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline Json identifiability_to_json(const IdentifiabilityReport& r, const std::vector<std::string>& labels) {
  Json out{{"holds", r.holds},
           {"theta_star", labels.at(r.theta_star)},
           {"min_kl_sum", number_or_null(r.min_kl_sum)},
           {"worst_theta", labels.at(r.worst_theta)},
           {"worst_graph", r.worst_graph ? reduced_graph_to_json(*r.worst_graph) : Json(nullptr)},
           {"violations", r.violations},
           {"examined", r.examined},
           {"exhaustive", r.exhaustive}};
  if (!r.per_graph.empty()) {
    Json rows = Json::array();
    for (const auto& e : r.per_graph)
      rows.push_back({{"graph", describe(e.graph)}, {"worst_theta", labels.at(e.worst_theta)}, {"kl_sum", e.kl_sum}});
    out["per_graph"] = std::move(rows);
  }
  return out;
}

inline Json assumptions_to_json(const AssumptionReport& r, const ScenarioConfig& c) {
  return Json{{"passed", r.passed},
              {"failures", r.failures},
              {"dim", r.dimension},
              {"topology", r.topology ? topology_to_json(*r.topology, c.f, r.dimension) : Json(nullptr)},
              {"identifiability",
               r.identifiability ? identifiability_to_json(*r.identifiability, c.model.hypotheses()) : Json(nullptr)},
              {"c0", r.c0},
              {"c1", r.c1 ? number_or_null(*r.c1) : Json(nullptr)}};
}

inline Json fit_to_json(const DecayFit& fit) {
  return Json{{"a", fit.a},
              {"b", fit.b},
              {"c", fit.c},
              {"r_squared", fit.r_squared},
              {"linear_r_squared", fit.linear_r_squared},
              {"quadratic_gain", fit.quadratic_gain},
              {"first_round", fit.first_round},
              {"last_round", fit.last_round}};
}

inline Json summary_to_json(const RunSummary& s, const ScenarioConfig& c) {
  const auto& labels = s.hypotheses;
  Json agents = Json::array();
  for (const auto& a : s.agents) {
    Json fits = Json::array();
    for (const auto& [h, fit] : a.fits) {
      Json row = fit_to_json(fit);
      row["theta"] = labels.at(h);
      fits.push_back(std::move(row));
    }
    Json beliefs = nullptr;
    if (!a.final_beliefs.empty()) {
      beliefs = Json::object();
      for (Hypothesis h = 0; h < labels.size(); ++h) beliefs[labels[h]] = a.final_beliefs[h];
    }
    agents.push_back({{"agent", a.agent + 1},
                      {"decision", a.decision ? Json(labels.at(*a.decision)) : Json(nullptr)},
                      {"decision_round", a.decision_round ? Json(*a.decision_round) : Json(nullptr)},
                      {"final_beliefs", std::move(beliefs)},
                      {"final_state", a.final_state},
                      {"fits", std::move(fits)}});
  }
  return Json{{"rule", to_string(s.rule)},
              {"seed", s.seed},
              {"rounds", s.rounds},
              {"f", s.f},
              {"hypotheses", labels},
              {"theta_star", labels.at(s.theta_star)},
              {"faulty", agents_to_json(s.faulty)},
              {"strategy", to_string(s.strategy)},
              {"success", s.success},
              {"decision_round", s.decision_round ? Json(*s.decision_round) : Json(nullptr)},
              {"final_diameter", s.diameters.empty() ? Json(nullptr) : Json(s.diameters.back())},
              {"diameters", s.diameters},
              {"assumptions", s.assumptions ? assumptions_to_json(*s.assumptions, c) : Json(nullptr)},
              {"agents", std::move(agents)}};
}

}  // namespace byzlearn::io
