#pragma once

// Trace CSV: `round,agent,kind,key,value`, one row per recorded scalar.
//   log_belief  key = hypothesis label
//   ratio       key = "a/b" (ordered pair of labels, off-diagonal only)
//   value       key = coordinate (1-based), pure consensus traces
//   diameter    agent and key empty
//   flag        key = defaults | clamped, written only when nonzero

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "byzlearn/trace.hpp"

namespace byzlearn {

inline constexpr std::string_view kTraceHeader = "round,agent,kind,key,value";

/// Shortest-safe round-trip rendering of a double.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& out, const RoundTrace& trace) {
  out << kTraceHeader << '\n';
  const std::size_t m = trace.hypothesis_count();
  for (const auto& round : trace.rounds) {
    for (const auto& rec : round.agents) {
      const std::string prefix = std::to_string(round.round) + ',' + std::to_string(rec.agent + 1) + ',';
      switch (trace.rule) {
        case Rule::bfl:
        case Rule::ff_bfl:
          for (Hypothesis h = 0; h < m; ++h)
            out << prefix << "log_belief," << trace.hypotheses[h] << ',' << format_number(rec.state[h]) << '\n';
          break;
        case Rule::pairwise:
          for (Hypothesis a = 0; a < m; ++a)
            for (Hypothesis b = 0; b < m; ++b)
              if (a != b)
                out << prefix << "ratio," << trace.hypotheses[a] << '/' << trace.hypotheses[b] << ','
                    << format_number(rec.state[a * m + b]) << '\n';
          break;
        case Rule::consensus:
          for (std::size_t d = 0; d < rec.state.size(); ++d)
            out << prefix << "value," << d + 1 << ',' << format_number(rec.state[d]) << '\n';
          break;
      }
      if (rec.defaults > 0) out << prefix << "flag,defaults," << rec.defaults << '\n';
      if (rec.clamped) out << prefix << "flag,clamped,1\n";
    }
    out << round.round << ",,diameter,," << format_number(round.diameter) << '\n';
  }
}

inline std::string trace_to_csv(const RoundTrace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_double(std::string_view text, std::size_t line) {
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    throw InputError("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline std::size_t parse_index(std::string_view text, std::size_t line) {
  const std::string s(text);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw InputError("trace line " + std::to_string(line) + ": bad integer '" + s + "'");
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace detail

/// Parses a trace CSV. The rule is inferred from the row kinds (log_belief
/// rows read back as bfl); the true hypothesis is not stored in the trace.
inline RoundTrace read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InputError("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw InputError("trace line 1: expected header '" + std::string(kTraceHeader) + "'");

  RoundTrace trace;
  std::optional<Rule> rule;
  std::map<std::string, Hypothesis> label_index;
  // round -> agent -> (key -> value)
  std::vector<std::map<AgentId, std::vector<std::pair<std::string, double>>>> values;
  std::vector<std::map<AgentId, std::pair<std::size_t, bool>>> flags;
  std::vector<std::optional<double>> diameters;

  auto ensure_round = [&](std::size_t r) {
    if (r >= values.size()) {
      values.resize(r + 1);
      flags.resize(r + 1);
      diameters.resize(r + 1);
    }
  };
  auto add_label = [&](const std::string& label) {
    if (label_index.emplace(label, trace.hypotheses.size()).second) trace.hypotheses.push_back(label);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5)
      throw InputError("trace line " + std::to_string(line_no) + ": expected 5 fields, found " +
                       std::to_string(fields.size()));
    const std::size_t round = detail::parse_index(fields[0], line_no);
    const std::string_view kind = fields[2];
    const std::string key(fields[3]);
    ensure_round(round);
    if (kind == "diameter") {
      diameters[round] = detail::parse_double(fields[4], line_no);
      continue;
    }
    const std::size_t agent = detail::parse_index(fields[1], line_no);
    if (agent == 0) throw InputError("trace line " + std::to_string(line_no) + ": agents are 1-based");
    const AgentId id = agent - 1;
    if (kind == "flag") {
      auto& flag = flags[round][id];
      if (key == "defaults")
        flag.first = detail::parse_index(fields[4], line_no);
      else if (key == "clamped")
        flag.second = detail::parse_double(fields[4], line_no) != 0.0;
      else
        throw InputError("trace line " + std::to_string(line_no) + ": unknown flag '" + key + "'");
      continue;
    }
    Rule row_rule;
    if (kind == "log_belief") {
      row_rule = Rule::bfl;
      add_label(key);
    } else if (kind == "ratio") {
      row_rule = Rule::pairwise;
      const auto slash = key.find('/');
      if (slash == std::string::npos)
        throw InputError("trace line " + std::to_string(line_no) + ": ratio key must be 'a/b'");
      add_label(key.substr(0, slash));
      add_label(key.substr(slash + 1));
    } else if (kind == "value") {
      row_rule = Rule::consensus;
    } else {
      throw InputError("trace line " + std::to_string(line_no) + ": unknown kind '" + std::string(kind) + "'");
    }
    if (rule && *rule != row_rule)
      throw InputError("trace line " + std::to_string(line_no) + ": mixes state kinds");
    rule = row_rule;
    values[round][id].emplace_back(key, detail::parse_double(fields[4], line_no));
  }
  if (!rule) throw InputError("trace has no state rows");
  trace.rule = *rule;

  const std::size_t m = trace.hypotheses.size();
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r].empty()) throw InputError("trace has no rows for round " + std::to_string(r));
    RoundRecord rr;
    rr.round = r;
    for (const auto& [agent, entries] : values[r]) {
      AgentRecord rec;
      rec.agent = agent;
      if (trace.rule == Rule::bfl) {
        rec.state.assign(m, 0.0);
        for (const auto& [key, v] : entries) rec.state[label_index.at(key)] = v;
        if (entries.size() != m)
          throw InputError("trace round " + std::to_string(r) + " agent " + std::to_string(agent + 1) +
                           ": expected " + std::to_string(m) + " log-beliefs");
      } else if (trace.rule == Rule::pairwise) {
        rec.state.assign(m * m, 0.0);
        for (const auto& [key, v] : entries) {
          const auto slash = key.find('/');
          rec.state[label_index.at(key.substr(0, slash)) * m + label_index.at(key.substr(slash + 1))] = v;
        }
      } else {
        for (const auto& [key, v] : entries) rec.state.push_back(v);
      }
      rec.consensus = rec.state;
      const auto flag = flags[r].find(agent);
      if (flag != flags[r].end()) {
        rec.defaults = flag->second.first;
        rec.clamped = flag->second.second;
      }
      rr.agents.push_back(std::move(rec));
    }
    rr.diameter = diameters[r].value_or(0.0);
    if (r == 0)
      for (const auto& rec : rr.agents) trace.honest.push_back(rec.agent);
    else if (rr.agents.size() != trace.honest.size())
      throw InputError("trace round " + std::to_string(r) + " lists a different set of agents");
    trace.rounds.push_back(std::move(rr));
  }
  return trace;
}

inline RoundTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  return read_trace_csv(in);
}

}  // namespace byzlearn
