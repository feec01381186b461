#pragma once

// Directed networks, m-dimensional reduced graphs and source components.
//
// Agents are 0-based inside the library; the file formats and every
// human-readable description use 1-based labels.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "byzlearn/error.hpp"
#include "byzlearn/rng.hpp"

namespace byzlearn {

using AgentId = std::size_t;
/// Sorted, duplicate-free list of agents.
using NodeSet = std::vector<AgentId>;

class Digraph {
 public:
  Digraph() = default;
  explicit Digraph(std::size_t n) : in_(n), out_(n) {}

  static Digraph complete(std::size_t n) {
    Digraph g(n);
    for (AgentId i = 0; i < n; ++i)
      for (AgentId j = 0; j < n; ++j)
        if (i != j) g.add_edge(i, j);
    return g;
  }

  /// Directed ring 1 -> 2 -> ... -> n -> 1.
  static Digraph cycle(std::size_t n) {
    Digraph g(n);
    if (n < 2) return g;
    for (AgentId i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
    return g;
  }

  void add_edge(AgentId from, AgentId to) {
    if (from >= size() || to >= size())
      throw InputError("edge (" + std::to_string(from + 1) + "," + std::to_string(to + 1) +
                       ") has an endpoint outside 1.." + std::to_string(size()));
    if (from == to) throw InputError("self-loop on agent " + std::to_string(from + 1));
    auto& in = in_[to];
    auto pos = std::lower_bound(in.begin(), in.end(), from);
    if (pos != in.end() && *pos == from)
      throw InputError("duplicate edge (" + std::to_string(from + 1) + "," +
                       std::to_string(to + 1) + ")");
    in.insert(pos, from);
    auto& out = out_[from];
    out.insert(std::lower_bound(out.begin(), out.end(), to), to);
    ++edges_;
  }

  std::size_t size() const noexcept { return in_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }
  std::span<const AgentId> incoming(AgentId i) const { return in_.at(i); }
  std::span<const AgentId> outgoing(AgentId i) const { return out_.at(i); }

  bool has_edge(AgentId from, AgentId to) const {
    const auto& in = in_.at(to);
    return std::binary_search(in.begin(), in.end(), from);
  }

  /// All edges ordered by (from, to).
  std::vector<std::pair<AgentId, AgentId>> edges() const {
    std::vector<std::pair<AgentId, AgentId>> result;
    result.reserve(edges_);
    for (AgentId from = 0; from < size(); ++from)
      for (AgentId to : out_[from]) result.emplace_back(from, to);
    return result;
  }

  friend bool operator==(const Digraph&, const Digraph&) = default;

 private:
  std::vector<std::vector<AgentId>> in_;
  std::vector<std::vector<AgentId>> out_;
  std::size_t edges_ = 0;
};

/// Base graph with a candidate faulty set removed and up to m*f further
/// incoming links dropped at every remaining node.
struct ReducedGraph {
  std::size_t base_size = 0;
  NodeSet faulty;
  /// Indexed by base agent id; empty for faulty agents.
  std::vector<NodeSet> removed;
  std::vector<NodeSet> incoming;
  std::vector<char> member;

  bool contains(AgentId v) const { return v < member.size() && member[v] != 0; }

  NodeSet nodes() const {
    NodeSet result;
    for (AgentId v = 0; v < base_size; ++v)
      if (member[v]) result.push_back(v);
    return result;
  }

  std::size_t edge_count() const {
    std::size_t total = 0;
    for (const auto& in : incoming) total += in.size();
    return total;
  }

  friend bool operator==(const ReducedGraph&, const ReducedGraph&) = default;
};

/// The trivial reduced graph: nothing faulty, nothing removed.
inline ReducedGraph identity_reduced_graph(const Digraph& g) {
  ReducedGraph h;
  h.base_size = g.size();
  h.removed.assign(g.size(), {});
  h.incoming.resize(g.size());
  h.member.assign(g.size(), 1);
  for (AgentId v = 0; v < g.size(); ++v) {
    auto in = g.incoming(v);
    h.incoming[v].assign(in.begin(), in.end());
  }
  return h;
}

/// Checks the ReducedGraph invariants against its base graph.
inline bool is_valid_reduced_graph(const ReducedGraph& h, const Digraph& g, std::size_t f,
                                   std::size_t m) {
  if (h.base_size != g.size() || h.member.size() != g.size() || h.incoming.size() != g.size() ||
      h.removed.size() != g.size())
    return false;
  if (h.faulty.size() > f || !std::is_sorted(h.faulty.begin(), h.faulty.end())) return false;
  for (AgentId v = 0; v < g.size(); ++v) {
    const bool is_faulty = std::binary_search(h.faulty.begin(), h.faulty.end(), v);
    if (is_faulty == (h.member[v] != 0)) return false;
    if (is_faulty) {
      if (!h.incoming[v].empty() || !h.removed[v].empty()) return false;
      continue;
    }
    if (h.removed[v].size() > m * f) return false;
    for (AgentId u : h.incoming[v])
      if (!g.has_edge(u, v) || !h.contains(u)) return false;
    for (AgentId u : h.removed[v])
      if (!g.has_edge(u, v) || !h.contains(u)) return false;
    // effective + removed must cover exactly the surviving base in-links
    std::size_t surviving = 0;
    for (AgentId u : g.incoming(v))
      if (h.contains(u)) ++surviving;
    if (surviving != h.incoming[v].size() + h.removed[v].size()) return false;
  }
  return true;
}

/// Human-readable, 1-based rendering used for witnesses and logs.
inline std::string describe(const ReducedGraph& h) {
  std::ostringstream os;
  os << "F={";
  for (std::size_t k = 0; k < h.faulty.size(); ++k) os << (k ? "," : "") << h.faulty[k] + 1;
  os << "} removed={";
  bool first = true;
  for (AgentId v = 0; v < h.base_size; ++v)
    for (AgentId u : h.removed[v]) {
      os << (first ? "" : ",") << u + 1 << "->" << v + 1;
      first = false;
    }
  os << "}";
  return os.str();
}

struct SourceAnalysis {
  /// Strongly connected components, each sorted, ordered by smallest member.
  std::vector<NodeSet> sccs;
  /// Indices into `sccs` of the components without incoming links from outside.
  std::vector<std::size_t> sources;

  const NodeSet& source(std::size_t k) const { return sccs.at(sources.at(k)); }
};

namespace detail {

// Tarjan over the reversed graph (edges v -> u for u in incoming(v)); the
// components are the same as in the forward graph.
inline SourceAnalysis analyze_components(const std::vector<char>& member,
                                         const std::vector<NodeSet>& incoming) {
  const std::size_t n = member.size();
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<AgentId> stack;
  std::vector<std::pair<AgentId, std::size_t>> call;
  std::size_t counter = 0;
  std::vector<NodeSet> sccs;

  for (AgentId root = 0; root < n; ++root) {
    if (!member[root] || index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      const auto& adj = incoming[v];
      if (next < adj.size()) {
        const AgentId w = adj[next++];
        if (!member[w]) continue;
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        NodeSet component;
        AgentId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = sccs.size();
          component.push_back(w);
        } while (w != v);
        std::sort(component.begin(), component.end());
        sccs.push_back(std::move(component));
      }
      const AgentId finished = v;
      call.pop_back();
      if (!call.empty()) {
        const AgentId parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }

  std::vector<std::size_t> order(sccs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sccs[a].front() < sccs[b].front(); });
  std::vector<std::size_t> rank(sccs.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k;

  SourceAnalysis result;
  result.sccs.resize(sccs.size());
  for (std::size_t k = 0; k < sccs.size(); ++k) result.sccs[rank[k]] = std::move(sccs[k]);
  for (std::size_t k = 0; k < result.sccs.size(); ++k) {
    bool closed = true;
    for (AgentId v : result.sccs[k]) {
      for (AgentId u : incoming[v])
        if (member[u] && rank[comp[u]] != k) {
          closed = false;
          break;
        }
      if (!closed) break;
    }
    if (closed) result.sources.push_back(k);
  }
  return result;
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_mul_overflow(a, b, &out)) return std::numeric_limits<std::uint64_t>::max();
  return out;
}

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) return std::numeric_limits<std::uint64_t>::max();
  return out;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // exact: result * (n - k + i) is divisible by i after the multiplication
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(result, i);
    result = saturating_mul(result / g, num / (i / g));
  }
  return result;
}

/// Advances `combo` to the next k-combination of {0..n-1} in lexicographic order.
inline bool next_combination(std::vector<std::size_t>& combo, std::size_t n) {
  const std::size_t k = combo.size();
  for (std::size_t pos = k; pos-- > 0;) {
    if (combo[pos] < n - k + pos) {
      ++combo[pos];
      for (std::size_t q = pos + 1; q < k; ++q) combo[q] = combo[q - 1] + 1;
      return true;
    }
  }
  return false;
}

inline std::vector<std::size_t> first_combination(std::size_t k) {
  std::vector<std::size_t> combo(k);
  for (std::size_t q = 0; q < k; ++q) combo[q] = q;
  return combo;
}

}  // namespace detail

inline SourceAnalysis source_components(const ReducedGraph& h) {
  return detail::analyze_components(h.member, h.incoming);
}

inline SourceAnalysis source_components(const Digraph& g) {
  return source_components(identity_reduced_graph(g));
}

inline bool is_strongly_connected(const Digraph& g) {
  return g.size() > 0 && source_components(g).sccs.size() == 1;
}

struct EnumerationOptions {
  std::uint64_t cap = 10'000'000;
  /// Only graphs where every node drops exactly min(m*f, available) links.
  bool maximal_only = false;
};

namespace detail {

inline void check_enumeration_arguments(const Digraph& g, std::size_t f, std::size_t m) {
  if (g.size() == 0) throw PreconditionError("graph has no agents");
  if (m == 0) throw PreconditionError("dimension m must be at least 1");
  if (f >= g.size())
    throw PreconditionError("fault budget f=" + std::to_string(f) + " must be below n=" +
                            std::to_string(g.size()));
}

inline std::uint64_t removal_choices(std::size_t available, std::size_t budget, bool maximal) {
  const std::size_t top = std::min(available, budget);
  if (maximal) return binomial(available, top);
  std::uint64_t total = 0;
  for (std::size_t k = 0; k <= top; ++k) total = saturating_add(total, binomial(available, k));
  return total;
}

template <typename Visit>
void for_each_faulty_set(std::size_t n, std::size_t f, Visit&& visit) {
  for (std::size_t size = 0; size <= f; ++size) {
    auto combo = first_combination(size);
    do {
      visit(combo);
    } while (next_combination(combo, n));
  }
}

}  // namespace detail

/// Exact number of distinct reduced graphs (saturates at UINT64_MAX):
/// sum over |F| <= f of prod over i in N of sum_{k} C(d_i, k), where d_i is
/// the number of in-links of i from N and k ranges over 0..min(m f, d_i)
/// (only the top value when `maximal_only`).
inline std::uint64_t count_reduced_graphs(const Digraph& g, std::size_t f, std::size_t m,
                                          bool maximal_only = false) {
  detail::check_enumeration_arguments(g, f, m);
  const std::size_t n = g.size();
  std::uint64_t total = 0;
  std::vector<char> faulty(n, 0);
  detail::for_each_faulty_set(n, f, [&](const std::vector<std::size_t>& combo) {
    std::fill(faulty.begin(), faulty.end(), 0);
    for (auto v : combo) faulty[v] = 1;
    std::uint64_t product = 1;
    for (AgentId v = 0; v < n; ++v) {
      if (faulty[v]) continue;
      std::size_t available = 0;
      for (AgentId u : g.incoming(v))
        if (!faulty[u]) ++available;
      product = detail::saturating_mul(product,
                                       detail::removal_choices(available, m * f, maximal_only));
    }
    total = detail::saturating_add(total, product);
  });
  return total;
}

/// Single-consumer stream over every reduced graph of `g` (each yielded once,
/// faulty sets by size then lexicographically, removals as an odometer with
/// the highest-numbered node varying fastest). The graph must outlive the
/// stream; the returned pointer is valid until the next call.
class ReducedGraphStream {
 public:
  ReducedGraphStream(const Digraph& g, std::size_t f, std::size_t m,
                     EnumerationOptions options = {})
      : graph_(&g), f_(f), m_(m), maximal_(options.maximal_only) {
    total_ = count_reduced_graphs(g, f, m, maximal_);
    if (total_ > options.cap) {
      std::ostringstream os;
      os << "reduced-graph enumeration of " << total_
         << (total_ == std::numeric_limits<std::uint64_t>::max() ? "+" : "")
         << " graphs exceeds the cap of " << options.cap
         << " (count = sum_{|F|<=" << f << "} prod_{i in N} sum_{k<=min(" << m * f
         << ",d_i)} C(d_i,k)); use sampling mode instead";
      throw ResourceLimitError(os.str());
    }
  }

  std::uint64_t total() const noexcept { return total_; }

  const ReducedGraph* next() {
    if (done_) return nullptr;
    if (!started_) {
      started_ = true;
      faulty_size_ = 0;
      combo_.clear();
      load_faulty_set();
      return &current_;
    }
    // odometer: last member varies fastest
    for (std::size_t pos = members_.size(); pos-- > 0;) {
      const AgentId v = members_[pos];
      if (digit_[pos] + 1 < choices_[pos].size()) {
        ++digit_[pos];
        apply_choice(pos, v);
        return &current_;
      }
      digit_[pos] = 0;
      apply_choice(pos, v);
    }
    if (!detail::next_combination(combo_, graph_->size())) {
      if (faulty_size_ == f_) {
        done_ = true;
        return nullptr;
      }
      ++faulty_size_;
      combo_ = detail::first_combination(faulty_size_);
    }
    load_faulty_set();
    return &current_;
  }

 private:
  struct Choice {
    NodeSet removed;
    NodeSet kept;
  };

  void load_faulty_set() {
    const std::size_t n = graph_->size();
    current_ = ReducedGraph{};
    current_.base_size = n;
    current_.faulty.assign(combo_.begin(), combo_.end());
    current_.member.assign(n, 1);
    for (auto v : combo_) current_.member[v] = 0;
    current_.removed.assign(n, {});
    current_.incoming.assign(n, {});
    members_.clear();
    choices_.clear();
    for (AgentId v = 0; v < n; ++v) {
      if (!current_.member[v]) continue;
      NodeSet available;
      for (AgentId u : graph_->incoming(v))
        if (current_.member[u]) available.push_back(u);
      const std::size_t top = std::min(available.size(), m_ * f_);
      std::vector<Choice> options;
      for (std::size_t k = maximal_ ? top : 0; k <= top; ++k) {
        auto combo = detail::first_combination(k);
        do {
          Choice c;
          std::vector<char> drop(available.size(), 0);
          for (auto idx : combo) drop[idx] = 1;
          for (std::size_t q = 0; q < available.size(); ++q)
            (drop[q] ? c.removed : c.kept).push_back(available[q]);
          options.push_back(std::move(c));
        } while (detail::next_combination(combo, available.size()));
      }
      members_.push_back(v);
      choices_.push_back(std::move(options));
    }
    digit_.assign(members_.size(), 0);
    for (std::size_t pos = 0; pos < members_.size(); ++pos) apply_choice(pos, members_[pos]);
  }

  void apply_choice(std::size_t pos, AgentId v) {
    const Choice& c = choices_[pos][digit_[pos]];
    current_.removed[v] = c.removed;
    current_.incoming[v] = c.kept;
  }

  const Digraph* graph_;
  std::size_t f_;
  std::size_t m_;
  bool maximal_;
  std::uint64_t total_ = 0;
  bool started_ = false;
  bool done_ = false;
  std::size_t faulty_size_ = 0;
  std::vector<std::size_t> combo_;
  std::vector<AgentId> members_;
  std::vector<std::vector<Choice>> choices_;
  std::vector<std::size_t> digit_;
  ReducedGraph current_;
};

/// Uniformly random faulty-set size, faulty set and maximal removals.
inline ReducedGraph sample_maximal_reduced_graph(const Digraph& g, std::size_t f, std::size_t m,
                                                 Rng& rng) {
  detail::check_enumeration_arguments(g, f, m);
  const std::size_t n = g.size();
  const std::size_t phi = uniform_index(rng, f + 1);
  std::vector<AgentId> perm(n);
  for (AgentId v = 0; v < n; ++v) perm[v] = v;
  for (std::size_t k = 0; k < phi; ++k) std::swap(perm[k], perm[k + uniform_index(rng, n - k)]);

  ReducedGraph h;
  h.base_size = n;
  h.faulty.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(phi));
  std::sort(h.faulty.begin(), h.faulty.end());
  h.member.assign(n, 1);
  for (auto v : h.faulty) h.member[v] = 0;
  h.removed.assign(n, {});
  h.incoming.assign(n, {});
  for (AgentId v = 0; v < n; ++v) {
    if (!h.member[v]) continue;
    NodeSet available;
    for (AgentId u : g.incoming(v))
      if (h.member[u]) available.push_back(u);
    const std::size_t drop = std::min(available.size(), m * f);
    for (std::size_t k = 0; k < drop; ++k)
      std::swap(available[k], available[k + uniform_index(rng, available.size() - k)]);
    h.removed[v].assign(available.begin(), available.begin() + static_cast<std::ptrdiff_t>(drop));
    h.incoming[v].assign(available.begin() + static_cast<std::ptrdiff_t>(drop), available.end());
    std::sort(h.removed[v].begin(), h.removed[v].end());
    std::sort(h.incoming[v].begin(), h.incoming[v].end());
  }
  return h;
}

struct TopologyReport {
  bool assumption_holds = false;
  /// Number of distinct reduced graphs (saturating).
  std::uint64_t chi = 0;
  /// Minimum source-component size; 0 when the assumption fails.
  std::size_t gamma = 0;
  std::optional<ReducedGraph> witness;
  std::vector<NodeSet> witness_sources;
  /// False in sampling mode: a pass is then not a certificate.
  bool exhaustive = true;
  std::uint64_t examined = 0;
};

struct TopologyOptions {
  std::uint64_t cap = 10'000'000;
  /// 0 = exhaustive; otherwise the number of random reduced graphs to test.
  std::uint64_t samples = 0;
  std::uint64_t seed = 1;
};

/// Visits the reduced graphs that decide source uniqueness and the minimum
/// source: removing links never merges source components and never grows
/// the unique source, so graphs with maximal removals are sufficient.
template <typename Visit>
std::uint64_t for_each_deciding_reduced_graph(const Digraph& g, std::size_t f, std::size_t m,
                                              const TopologyOptions& options, Visit&& visit) {
  std::uint64_t visited = 0;
  if (options.samples > 0) {
    Rng rng = make_substream(options.seed, 0, 0, StreamPurpose::sampling);
    for (std::uint64_t k = 0; k < options.samples; ++k) {
      const ReducedGraph h = sample_maximal_reduced_graph(g, f, m, rng);
      ++visited;
      if (!visit(h)) break;
    }
    return visited;
  }
  ReducedGraphStream stream(g, f, m, {.cap = options.cap, .maximal_only = true});
  while (const ReducedGraph* h = stream.next()) {
    ++visited;
    if (!visit(*h)) break;
  }
  return visited;
}

/// Does every m-dimensional reduced graph have exactly one source component?
inline TopologyReport check_topology(const Digraph& g, std::size_t f, std::size_t m,
                                     TopologyOptions options = {}) {
  TopologyReport report;
  report.chi = count_reduced_graphs(g, f, m);
  report.exhaustive = options.samples == 0;
  report.assumption_holds = true;
  std::size_t gamma = std::numeric_limits<std::size_t>::max();
  report.examined = for_each_deciding_reduced_graph(g, f, m, options, [&](const ReducedGraph& h) {
    const SourceAnalysis analysis = source_components(h);
    if (analysis.sources.size() != 1) {
      report.assumption_holds = false;
      report.witness = h;
      for (auto k : analysis.sources) report.witness_sources.push_back(analysis.sccs[k]);
      return false;
    }
    gamma = std::min(gamma, analysis.source(0).size());
    return true;
  });
  report.gamma = report.assumption_holds ? gamma : 0;
  return report;
}

/// nu = chi * (n - phi), the window length of the contraction bound.
inline std::uint64_t mixing_window(const TopologyReport& report, std::size_t n, std::size_t phi) {
  return detail::saturating_mul(report.chi, n - phi);
}

}  // namespace byzlearn
