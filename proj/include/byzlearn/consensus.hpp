#pragma once

// Byzantine consensus primitives: the scalar trimmed-mean round, Tverberg
// points (exact clipping for m <= 2, a feasibility LP above), and the vector One-Iter step built on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "byzlearn/error.hpp"
#include "byzlearn/graph.hpp"
#include "byzlearn/lp.hpp"

namespace byzlearn {

using Vector = std::vector<double>;

/// One entry of the multiset an agent collects in a round. `defaulted`
/// marks a missing message that was replaced by the default value.
template <typename Value>
struct Received {
  AgentId sender = 0;
  Value value{};
  bool defaulted = false;
};

template <typename Value>
using ReceivedMultiset = std::vector<Received<Value>>;

namespace detail {

/// Sorts (value, sender) pairs, drops f from each end and averages the
/// survivors together with `own`.
inline double trimmed_average(double own, std::vector<std::pair<double, AgentId>>& values,
                              std::size_t f) {
  if (values.size() < 2 * f + 1)
    throw DegenerateInputError("trimmed round needs at least 2f+1 = " + std::to_string(2 * f + 1) +
                               " received values, got " + std::to_string(values.size()));
  std::sort(values.begin(), values.end());
  double sum = own;
  for (std::size_t k = f; k + f < values.size(); ++k) sum += values[k].first;
  return sum / static_cast<double>(values.size() - 2 * f + 1);
}

}  // namespace detail

/// Scalar trimmed consensus round: remove the f smallest and f largest
/// received values (ordered by value, then sender) and average the rest
/// with the agent's own value.
inline double trimmed_scalar_round(double own, std::span<const Received<double>> received,
                                   std::size_t f) {
  std::vector<std::pair<double, AgentId>> values;
  values.reserve(received.size());
  for (const auto& r : received) values.emplace_back(r.value, r.sender);
  return detail::trimmed_average(own, values, f);
}

struct TverbergResult {
  Vector point;
  /// f+1 nonempty parts, as indices into the input.
  std::vector<std::vector<std::size_t>> partition;
  /// Worst violation of the hull-membership constraints over all parts, in
  /// units of the input's half-spread (<= 0; 0 means exact).
  double feasibility_margin = 0.0;
};

namespace geometry {

/// Signed containment margin of `x` in Conv(points) for dimension 1 or 2:
/// positive inside, negative outside (never below minus the distance).
inline double hull_margin(const Vector& x, std::span<const Vector> points) {
  if (x.size() == 1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : points) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    return std::min(x[0] - lo, hi - x[0]);
  }
  if (x.size() != 2) throw PreconditionError("hull_margin supports dimensions 1 and 2 only");

  using P = std::pair<double, double>;
  std::vector<P> pts;
  for (const auto& p : points) pts.emplace_back(p[0], p[1]);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](P o, P a, P b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<P> hull;
  if (pts.size() >= 3) {
    std::vector<P> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
      h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
      while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
      h[k++] = pts[i];
    }
    h.resize(k - 1);
    hull = std::move(h);
  } else {
    hull = pts;
  }

  const P q{x[0], x[1]};
  auto segment_distance = [&](P a, P b) {
    const double dx = b.first - a.first, dy = b.second - a.second;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((q.first - a.first) * dx + (q.second - a.second) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.first + t * dx - q.first, ey = a.second + t * dy - q.second;
    return std::sqrt(ex * ex + ey * ey);
  };
  if (hull.size() == 1) return -segment_distance(hull[0], hull[0]);
  if (hull.size() == 2) return -segment_distance(hull[0], hull[1]);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < hull.size(); ++e) {
    const P a = hull[e], b = hull[(e + 1) % hull.size()];
    const double len = std::hypot(b.first - a.first, b.second - a.second);
    margin = std::min(margin, cross(a, b, q) / len);
  }
  return margin;
}

using Point2 = std::pair<double, double>;

inline double cross2(Point2 o, Point2 a, Point2 b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

/// Convex hull in counter-clockwise order; one or two vertices when the
/// input is a point or collinear.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

/// Keeps the part of a convex vertex cycle with a*x + b*y <= c + tol.
inline std::vector<Point2> clip(const std::vector<Point2>& poly, double a, double b, double c, double tol) {
  std::vector<Point2> out;
  const std::size_t k = poly.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Point2 p = poly[i], q = poly[(i + 1) % k];
    const double sp = a * p.first + b * p.second - c, sq = a * q.first + b * q.second - c;
    if (sp <= tol) out.push_back(p);
    if ((sp <= tol) != (sq <= tol) && k > 1) {
      const double t = sp / (sp - sq);
      out.emplace_back(p.first + t * (q.first - p.first), p.second + t * (q.second - p.second));
    }
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  return out;
}

/// Intersects `region` with the hull `h` (as returned by convex_hull).
inline std::vector<Point2> intersect(std::vector<Point2> region, const std::vector<Point2>& h, double tol) {
  auto half_plane = [&](Point2 p, Point2 q) {
    // left of p -> q, normalized so tol is a distance
    const double dx = q.first - p.first, dy = q.second - p.second;
    const double len = std::hypot(dx, dy);
    region = clip(region, dy / len, -dx / len, (dy * p.first - dx * p.second) / len, tol);
  };
  if (h.size() == 1) {
    half_plane(h[0], {h[0].first + 1.0, h[0].second});
    if (!region.empty()) half_plane({h[0].first + 1.0, h[0].second}, h[0]);
    if (!region.empty()) half_plane(h[0], {h[0].first, h[0].second + 1.0});
    if (!region.empty()) half_plane({h[0].first, h[0].second + 1.0}, h[0]);
    if (!region.empty()) region = h;
  } else if (h.size() == 2) {
    const Point2 a = h[0], b = h[1];
    half_plane(a, b);
    if (!region.empty()) half_plane(b, a);
    const Point2 n{a.first - (b.second - a.second), a.second + (b.first - a.first)};
    const Point2 m{b.first - (b.second - a.second), b.second + (b.first - a.first)};
    if (!region.empty()) half_plane(n, a);
    if (!region.empty()) half_plane(b, m);
  } else {
    for (std::size_t e = 0; e < h.size() && !region.empty(); ++e) half_plane(h[e], h[(e + 1) % h.size()]);
  }
  return region;
}

}  // namespace geometry

namespace detail {

/// Next restricted-growth string with values capped at `max_block`; returns
/// false after the last one.
inline bool next_rgs(std::vector<std::size_t>& a, std::size_t max_block) {
  const std::size_t n = a.size();
  std::vector<std::size_t> prefix_max(n, 0);
  for (std::size_t i = 1; i < n; ++i) prefix_max[i] = std::max(prefix_max[i - 1], a[i - 1]);
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t cap = std::min(max_block, prefix_max[i] + 1);
    if (a[i] < cap) {
      ++a[i];
      std::fill(a.begin() + static_cast<std::ptrdiff_t>(i) + 1, a.end(), 0);
      return true;
    }
  }
  return false;
}

/// Common point of the part hulls for m <= 2, in original coordinates.
/// Minimizes the coordinate sum, then each coordinate.
inline std::optional<Vector> intersect_parts_low_dim(const std::vector<Vector>& pts,
                                                     const std::vector<std::size_t>& rgs,
                                                     std::size_t f, double tol) {
  const std::size_t m = pts.front().size();
  if (m == 1) {
    double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t p = 0; p <= f; ++p) {
      double plo = std::numeric_limits<double>::infinity(), phi = -plo;
      for (std::size_t k = 0; k < pts.size(); ++k)
        if (rgs[k] == p) plo = std::min(plo, pts[k][0]), phi = std::max(phi, pts[k][0]);
      lo = std::max(lo, plo);
      hi = std::min(hi, phi);
    }
    if (lo > hi + tol) return std::nullopt;
    return Vector{std::min(lo, hi)};
  }
  std::vector<std::vector<geometry::Point2>> hulls(f + 1);
  for (std::size_t p = 0; p <= f; ++p) {
    std::vector<geometry::Point2> part;
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (rgs[k] == p) part.emplace_back(pts[k][0], pts[k][1]);
    hulls[p] = geometry::convex_hull(std::move(part));
  }
  std::vector<std::size_t> by_size(f + 1);
  for (std::size_t p = 0; p <= f; ++p) by_size[p] = p;
  std::stable_sort(by_size.begin(), by_size.end(),
                   [&](std::size_t a, std::size_t b) { return hulls[a].size() < hulls[b].size(); });
  std::vector<geometry::Point2> region = hulls[by_size[0]];
  for (std::size_t q = 1; q <= f && !region.empty(); ++q) region = geometry::intersect(region, hulls[by_size[q]], tol);
  if (region.empty()) return std::nullopt;
  const geometry::Point2 best = *std::min_element(region.begin(), region.end(), [](auto a, auto b) {
    const double sa = a.first + a.second, sb = b.first + b.second;
    if (sa != sb) return sa < sb;
    return a < b;
  });
  return Vector{best.first, best.second};
}

/// Common point of the part hulls via the feasibility LP on normalized
/// coordinates `z`.
inline std::optional<Vector> intersect_parts_lp(const std::vector<Vector>& z, const std::vector<std::size_t>& rgs,
                                                std::size_t f) {
  const std::size_t n = z.size(), m = z.front().size();
  // variables: lambda_k for each point k; part 0 defines x
  lp::Problem problem((f + 1) + f * m, n);
  for (std::size_t k = 0; k < n; ++k) problem.at(rgs[k], k) = 1.0;
  for (std::size_t p = 0; p <= f; ++p) problem.b[p] = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t d = 0; d < m; ++d) {
      if (rgs[k] == 0) {
        for (std::size_t p = 1; p <= f; ++p) problem.at(f + 1 + (p - 1) * m + d, k) = -z[k][d];
      } else {
        problem.at(f + 1 + (rgs[k] - 1) * m + d, k) = z[k][d];
      }
    }
  }
  std::vector<double> sum_objective(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    if (rgs[k] == 0)
      for (std::size_t d = 0; d < m; ++d) sum_objective[k] += z[k][d];
  problem.objectives.push_back(std::move(sum_objective));
  for (std::size_t d = 0; d < m; ++d) {
    std::vector<double> coordinate(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      if (rgs[k] == 0) coordinate[k] = z[k][d];
    problem.objectives.push_back(std::move(coordinate));
  }
  const lp::Result solved = lp::solve(problem, 1e-9);
  if (!solved.feasible) return std::nullopt;
  Vector x(m, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    if (rgs[k] == 0)
      for (std::size_t d = 0; d < m; ++d) x[d] += solved.x[k] * z[k][d];
  return x;
}

/// Distance (in the units of `pts`) by which `x` misses the worst part hull,
/// per coordinate box for m > 2; 0 when inside every part.
inline double worst_violation(const Vector& x, const std::vector<Vector>& pts, const std::vector<std::size_t>& rgs,
                              std::size_t f) {
  double worst = 0.0;
  for (std::size_t p = 0; p <= f; ++p) {
    std::vector<Vector> part;
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (rgs[k] == p) part.push_back(pts[k]);
    if (x.size() <= 2) {
      worst = std::max(worst, -geometry::hull_margin(x, part));
      continue;
    }
    for (std::size_t d = 0; d < x.size(); ++d) {
      double lo = part.front()[d], hi = lo;
      for (const auto& q : part) lo = std::min(lo, q[d]), hi = std::max(hi, q[d]);
      worst = std::max({worst, lo - x[d], x[d] - hi});
    }
  }
  return worst;
}

}  // namespace detail

enum class TverbergMethod { automatic, lp };

/// A point in the intersection of the convex hulls of an (f+1)-way partition
/// of exactly (m+1)f+1 points. Points are ordered lexicographically first, so
/// the answer depends only on the multiset; partitions are tried in
/// lexicographic restricted-growth order and the first feasible one wins.
/// Within it the point minimizes the coordinate sum, then each coordinate.
/// For m <= 2 the intersection is computed by exact polygon clipping;
/// otherwise (or with TverbergMethod::lp) by a simplex LP.
inline TverbergResult tverberg_point(std::span<const Vector> points, std::size_t f,
                                     TverbergMethod method = TverbergMethod::automatic) {
  if (points.empty()) throw DegenerateInputError("Tverberg point of an empty multiset");
  const std::size_t m = points.front().size();
  if (m == 0) throw DegenerateInputError("Tverberg point of zero-dimensional vectors");
  for (const auto& p : points) {
    if (p.size() != m) throw InputError("Tverberg input mixes vector dimensions");
    for (double v : p)
      if (!std::isfinite(v)) throw InputError("Tverberg input contains non-finite values");
  }
  const std::size_t required = (m + 1) * f + 1;
  if (points.size() != required)
    throw DegenerateInputError("Tverberg point needs exactly (m+1)f+1 = " +
                               std::to_string(required) + " points, got " +
                               std::to_string(points.size()));

  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<Vector> sorted(n);
  for (std::size_t k = 0; k < n; ++k) sorted[k] = points[order[k]];

  Vector lo(m, std::numeric_limits<double>::infinity()), hi(m, -std::numeric_limits<double>::infinity());
  double magnitude = 1.0;
  for (const auto& p : sorted)
    for (std::size_t d = 0; d < m; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
      magnitude = std::max(magnitude, std::abs(p[d]));
    }
  Vector center(m);
  double scale = 0.0;
  for (std::size_t d = 0; d < m; ++d) {
    center[d] = 0.5 * (lo[d] + hi[d]);
    scale = std::max(scale, 0.5 * (hi[d] - lo[d]));
  }

  auto to_partition = [&](const std::vector<std::size_t>& rgs) {
    std::vector<std::vector<std::size_t>> parts(f + 1);
    for (std::size_t k = 0; k < n; ++k) parts[rgs[k]].push_back(order[k]);
    return parts;
  };
  if (scale == 0.0) {
    std::vector<std::size_t> blocks(n, 0);
    for (std::size_t k = 0; k < f; ++k) blocks[n - f + k] = k + 1;  // first RGS with f+1 blocks
    return {sorted.front(), to_partition(blocks), 0.0};
  }

  const bool exact = m <= 2 && method == TverbergMethod::automatic;
  std::vector<Vector> z(n, Vector(m));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t d = 0; d < m; ++d) z[k][d] = (sorted[k][d] - center[d]) / scale;
  const double tol = 1e-12 * magnitude;

  std::vector<std::size_t> rgs(n, 0);
  do {
    if (*std::max_element(rgs.begin(), rgs.end()) != f) continue;
    Vector point;
    if (exact) {
      auto x = detail::intersect_parts_low_dim(sorted, rgs, f, tol);
      if (!x) continue;
      point = std::move(*x);
    } else {
      auto x = detail::intersect_parts_lp(z, rgs, f);
      if (!x) continue;
      point.resize(m);
      for (std::size_t d = 0; d < m; ++d) point[d] = center[d] + scale * (*x)[d];
    }
    const double violation = detail::worst_violation(point, sorted, rgs, f) / scale;
    return {std::move(point), to_partition(rgs), -violation};
  } while (detail::next_rgs(rgs, f));

  throw InternalError("no feasible Tverberg partition found; the intersection solver is inconsistent");
}

struct OneIterOptions {
  /// Refuse |received| + 1 above this (the subset loop is combinatorial).
  std::size_t max_inputs = 20;
};

/// Vector Byzantine consensus step: average of `own` and the Tverberg points
/// of every ((m+1)f+1)-subset of {own} + received, subsets in lexicographic
/// index order with `own` first, duplicates kept.
inline Vector one_iter(const Vector& own, std::span<const Received<Vector>> received, std::size_t f,
                       OneIterOptions options = {}) {
  const std::size_t m = own.size();
  if (m == 0) throw DegenerateInputError("one_iter on a zero-dimensional state");
  std::vector<Vector> inputs;
  inputs.reserve(received.size() + 1);
  inputs.push_back(own);
  for (const auto& r : received) {
    if (r.value.size() != m)
      throw InputError("received vector from agent " + std::to_string(r.sender + 1) +
                       " has dimension " + std::to_string(r.value.size()) + ", expected " +
                       std::to_string(m));
    inputs.push_back(r.value);
  }
  const std::size_t k = (m + 1) * f + 1;
  if (inputs.size() < k)
    throw DegenerateInputError("one_iter needs at least (m+1)f+1 = " + std::to_string(k) +
                               " values (own plus in-neighbors) for m=" + std::to_string(m) +
                               ", f=" + std::to_string(f) + ", got " +
                               std::to_string(inputs.size()));
  if (inputs.size() > options.max_inputs)
    throw ResourceLimitError("one_iter refuses " + std::to_string(inputs.size()) +
                             " inputs (limit " + std::to_string(options.max_inputs) + ")");

  Vector sum = own;
  std::size_t count = 1;
  std::vector<Vector> subset(k);
  auto combo = detail::first_combination(k);
  do {
    for (std::size_t q = 0; q < k; ++q) subset[q] = inputs[combo[q]];
    const TverbergResult t = tverberg_point(subset, f);
    for (std::size_t d = 0; d < m; ++d) sum[d] += t.point[d];
    ++count;
  } while (detail::next_combination(combo, inputs.size()));
  for (auto& v : sum) v /= static_cast<double>(count);
  return sum;
}

}  // namespace byzlearn
