#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with the library beyond the plain Digraph container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "byzlearn/graph.hpp"

namespace oracle {

using Mask = std::uint32_t;

/// One reduced graph as bitmasks: faulty set and, per node, the set of
/// in-neighbors that survive.
struct Reduced {
  Mask faulty = 0;
  std::vector<Mask> in;
  bool operator<(const Reduced& o) const { return std::tie(faulty, in) < std::tie(o.faulty, o.in); }
  bool operator==(const Reduced& o) const { return faulty == o.faulty && in == o.in; }
};

inline int popcount(Mask x) { return __builtin_popcount(x); }

/// Every reduced graph: any faulty set of size <= f, then any removal of at
/// most m*f surviving in-links at every non-faulty node.
template <typename Visit>
void for_each_reduced(const byzlearn::Digraph& g, std::size_t f, std::size_t m, Visit&& visit) {
  const std::size_t n = g.size();
  std::vector<Mask> base_in(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    for (auto u : g.incoming(v)) base_in[v] |= Mask{1} << u;
  Reduced r;
  r.in.resize(n);
  for (Mask faulty = 0; faulty < (Mask{1} << n); ++faulty) {
    if (static_cast<std::size_t>(popcount(faulty)) > f) continue;
    std::vector<std::vector<Mask>> options(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (faulty >> v & 1) {
        options[v] = {0};
        continue;
      }
      const Mask avail = base_in[v] & ~faulty;
      // every submask of avail whose complement within avail has size <= m f
      for (Mask keep = avail;; keep = (keep - 1) & avail) {
        if (static_cast<std::size_t>(popcount(avail & ~keep)) <= m * f) options[v].push_back(keep);
        if (keep == 0) break;
      }
    }
    std::vector<std::size_t> idx(n, 0);
    r.faulty = faulty;
    for (;;) {
      for (std::size_t v = 0; v < n; ++v) r.in[v] = options[v][idx[v]];
      visit(static_cast<const Reduced&>(r));
      std::size_t pos = 0;
      while (pos < n && ++idx[pos] == options[pos].size()) idx[pos++] = 0;
      if (pos == n) break;
    }
  }
}

inline std::vector<Reduced> all_reduced(const byzlearn::Digraph& g, std::size_t f, std::size_t m) {
  std::vector<Reduced> out;
  for_each_reduced(g, f, m, [&](const Reduced& r) { out.push_back(r); });
  return out;
}

/// Source components via reachability: v is in a source component iff
/// everything that reaches v is reachable from v.
inline std::vector<Mask> sources(const Reduced& r, std::size_t n) {
  std::vector<Mask> reach(n, 0);  // reach[v] = nodes reachable from v
  for (std::size_t v = 0; v < n; ++v) {
    if (r.faulty >> v & 1) continue;
    reach[v] = Mask{1} << v;
  }
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t u = 0; u < n; ++u)
      if (r.in[v] >> u & 1) reach[u] |= Mask{1} << v;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t u = 0; u < n; ++u)
      if (reach[u] >> k & 1) reach[u] |= reach[k];
  std::vector<Mask> found;
  for (std::size_t v = 0; v < n; ++v) {
    if (r.faulty >> v & 1) continue;
    Mask reaches_v = 0;
    for (std::size_t u = 0; u < n; ++u)
      if (reach[u] >> v & 1) reaches_v |= Mask{1} << u;
    if ((reaches_v & ~reach[v]) != 0) continue;
    const Mask component = reaches_v & reach[v];
    if (std::find(found.begin(), found.end(), component) == found.end()) found.push_back(component);
  }
  return found;
}

struct TopologyVerdict {
  bool holds = true;
  std::size_t chi = 0;
  std::size_t gamma = 0;
};

inline TopologyVerdict check(const byzlearn::Digraph& g, std::size_t f, std::size_t m) {
  TopologyVerdict v;
  v.gamma = g.size();
  for_each_reduced(g, f, m, [&](const Reduced& r) {
    ++v.chi;
    if (!v.holds) return;
    const auto s = sources(r, g.size());
    if (s.size() != 1) {
      v.holds = false;
      v.gamma = 0;
      return;
    }
    v.gamma = std::min<std::size_t>(v.gamma, popcount(s.front()));
  });
  return v;
}

// ---------------------------------------------------------------------------
// Convex hull membership (m <= 2) by Caratheodory: a planar point lies in
// the hull iff it lies in a triangle, segment or point of the set.

using Point = std::vector<double>;

inline bool in_hull_1d(double x, const std::vector<Point>& pts, double tol) {
  double lo = pts.front()[0], hi = pts.front()[0];
  for (const auto& p : pts) lo = std::min(lo, p[0]), hi = std::max(hi, p[0]);
  return x >= lo - tol && x <= hi + tol;
}

inline bool in_segment(const Point& x, const Point& a, const Point& b, double tol) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double px = a[0] + t * dx - x[0], py = a[1] + t * dy - x[1];
  return std::sqrt(px * px + py * py) <= tol;
}

inline bool in_triangle(const Point& x, const Point& a, const Point& b, const Point& c, double tol) {
  auto cross = [](const Point& o, const Point& p, const Point& q) {
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
  };
  const double area = cross(a, b, c);
  if (std::abs(area) < 1e-300) return false;
  const double s = area > 0 ? 1.0 : -1.0;
  auto edge_ok = [&](const Point& p, const Point& q) {
    const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
    return s * cross(p, q, x) >= -tol * len;
  };
  return edge_ok(a, b) && edge_ok(b, c) && edge_ok(c, a);
}

inline bool in_hull_2d(const Point& x, const std::vector<Point>& pts, double tol) {
  const std::size_t k = pts.size();
  for (std::size_t a = 0; a < k; ++a) {
    if (std::hypot(x[0] - pts[a][0], x[1] - pts[a][1]) <= tol) return true;
    for (std::size_t b = a + 1; b < k; ++b) {
      if (in_segment(x, pts[a], pts[b], tol)) return true;
      for (std::size_t c = b + 1; c < k; ++c)
        if (in_triangle(x, pts[a], pts[b], pts[c], tol)) return true;
    }
  }
  return false;
}

inline bool in_hull(const Point& x, const std::vector<Point>& pts, double tol) {
  return x.size() == 1 ? in_hull_1d(x[0], pts, tol) : in_hull_2d(x, pts, tol);
}

/// Brute force: does any partition of `pts` into f+1 parts have x in every
/// part's hull? Used to confirm Tverberg depth.
inline bool has_tverberg_partition(const Point& x, const std::vector<Point>& pts, std::size_t f, double tol) {
  const std::size_t k = pts.size();
  std::vector<std::size_t> label(k, 0);
  for (;;) {
    std::vector<std::vector<Point>> parts(f + 1);
    for (std::size_t i = 0; i < k; ++i) parts[label[i]].push_back(pts[i]);
    bool ok = true;
    for (const auto& p : parts)
      if (p.empty() || !in_hull(x, p, tol)) {
        ok = false;
        break;
      }
    if (ok) return true;
    std::size_t pos = 0;
    while (pos < k && ++label[pos] > f) label[pos++] = 0;
    if (pos == k) return false;
  }
}

/// One-dimensional One-Iter: the Tverberg point of 2f+1 reals is their
/// median, so the step is the mean of the own value and the medians of all
/// (2f+1)-subsets.
inline double one_iter_1d(double own, const std::vector<double>& received, std::size_t f) {
  std::vector<double> inputs{own};
  inputs.insert(inputs.end(), received.begin(), received.end());
  const std::size_t k = 2 * f + 1, n = inputs.size();
  double sum = own;
  std::size_t count = 1;
  for (Mask s = 0; s < (Mask{1} << n); ++s) {
    if (static_cast<std::size_t>(popcount(s)) != k) continue;
    std::vector<double> sub;
    for (std::size_t i = 0; i < n; ++i)
      if (s >> i & 1) sub.push_back(inputs[i]);
    std::nth_element(sub.begin(), sub.begin() + static_cast<std::ptrdiff_t>(f), sub.end());
    sum += sub[f];
    ++count;
  }
  return sum / static_cast<double>(count);
}

/// Trimmed mean: drop the f smallest and f largest received values, then
/// average the rest with the own value.
inline double trimmed(double own, std::vector<double> received, std::size_t f) {
  std::sort(received.begin(), received.end());
  double sum = own;
  for (std::size_t i = f; i + f < received.size(); ++i) sum += received[i];
  return sum / static_cast<double>(received.size() - 2 * f + 1);
}

/// psi_t = A psi_{t-1} + S_t, iterated directly (no powers).
inline std::vector<std::vector<double>> iterate_linear(const std::vector<std::vector<double>>& a,
                                                       const std::vector<std::vector<double>>& increments) {
  const std::size_t n = a.size();
  std::vector<double> psi(n, 0.0), s(n, 0.0);
  std::vector<std::vector<double>> out{psi};
  for (const auto& l : increments) {
    for (std::size_t i = 0; i < n; ++i) s[i] += l[i];
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) next[i] += a[i][j] * psi[j];
      next[i] += s[i];
    }
    psi = next;
    out.push_back(psi);
  }
  return out;
}

}  // namespace oracle
