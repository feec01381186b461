#pragma once

// Dense two-phase simplex for small equality-form feasibility problems
//   A x = b,  x >= 0,
// with a list of objectives minimized lexicographically. Bland's rule keeps
// the pivot sequence (and therefore the returned vertex) deterministic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "byzlearn/error.hpp"

namespace byzlearn::lp {

struct Problem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // rows x cols, row-major
  std::vector<double> b;
  std::vector<std::vector<double>> objectives;

  Problem() = default;
  Problem(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0), b(r, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

struct Result {
  bool feasible = false;
  std::vector<double> x;
  /// Phase-one objective at termination (sum of artificial values).
  double infeasibility = 0.0;
};

namespace detail {

class Tableau {
 public:
  Tableau(const Problem& p, double tol)
      : rows_(p.rows), cols_(p.cols), total_(p.cols + p.rows), width_(total_ + 1), tol_(tol),
        t_(rows_ * width_, 0.0), basis_(rows_), live_(rows_, 1), allowed_(total_, 1) {
    for (std::size_t r = 0; r < rows_; ++r) {
      const double sign = p.b[r] < 0.0 ? -1.0 : 1.0;
      for (std::size_t c = 0; c < cols_; ++c) cell(r, c) = sign * p.at(r, c);
      cell(r, cols_ + r) = 1.0;
      cell(r, total_) = sign * p.b[r];
      basis_[r] = cols_ + r;
    }
  }

  /// Returns the phase-one infeasibility.
  double phase_one() {
    std::vector<double> cost(total_, 0.0);
    for (std::size_t j = cols_; j < total_; ++j) cost[j] = 1.0;
    if (!optimize(cost)) throw InternalError("phase-one simplex reported unboundedness");
    double infeasibility = 0.0;
    for (std::size_t r = 0; r < rows_; ++r)
      if (live_[r] && basis_[r] >= cols_) infeasibility += cell(r, total_);
    return infeasibility;
  }

  void drop_artificials() {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!live_[r] || basis_[r] < cols_) continue;
      std::size_t best = total_;
      double best_abs = tol_;
      for (std::size_t j = 0; j < cols_; ++j)
        if (std::abs(cell(r, j)) > best_abs) {
          best_abs = std::abs(cell(r, j));
          best = j;
        }
      if (best == total_)
        live_[r] = 0;  // redundant constraint
      else
        pivot(r, best, nullptr);
    }
    for (std::size_t j = cols_; j < total_; ++j) allowed_[j] = 0;
  }

  /// Minimizes `objective` over the current face, then restricts the face
  /// to the optimal set before the next objective.
  void minimize_on_face(const std::vector<double>& objective) {
    std::vector<double> cost(total_, 0.0);
    for (std::size_t j = 0; j < cols_ && j < objective.size(); ++j) cost[j] = objective[j];
    if (!optimize(cost)) throw InternalError("simplex objective unbounded on a bounded polytope");
    std::vector<char> basic(total_, 0);
    for (std::size_t r = 0; r < rows_; ++r)
      if (live_[r]) basic[basis_[r]] = 1;
    for (std::size_t j = 0; j < total_; ++j)
      if (!basic[j] && reduced_[j] > tol_) allowed_[j] = 0;
  }

  std::vector<double> solution() const {
    std::vector<double> x(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      if (live_[r] && basis_[r] < cols_) x[basis_[r]] = cell(r, total_);
    return x;
  }

 private:
  double& cell(std::size_t r, std::size_t c) { return t_[r * width_ + c]; }
  double cell(std::size_t r, std::size_t c) const { return t_[r * width_ + c]; }

  bool optimize(const std::vector<double>& cost) {
    reduced_.assign(width_, 0.0);
    for (std::size_t j = 0; j < total_; ++j) reduced_[j] = cost[j];
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!live_[r]) continue;
      const double cb = cost[basis_[r]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) reduced_[j] -= cb * cell(r, j);
    }
    std::vector<char> basic(total_, 0);
    for (std::size_t r = 0; r < rows_; ++r)
      if (live_[r]) basic[basis_[r]] = 1;

    for (std::size_t iter = 0; iter < 50'000; ++iter) {
      std::size_t enter = total_;
      for (std::size_t j = 0; j < total_; ++j)
        if (allowed_[j] && !basic[j] && reduced_[j] < -tol_) {
          enter = j;
          break;
        }
      if (enter == total_) return true;

      std::size_t leave = rows_;
      double best_ratio = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!live_[r]) continue;
        const double coef = cell(r, enter);
        if (coef <= tol_) continue;
        const double ratio = std::max(cell(r, total_), 0.0) / coef;
        const double tie = 1e-12 * std::max(1.0, std::abs(best_ratio));
        if (leave == rows_ || ratio < best_ratio - tie ||
            (ratio <= best_ratio + tie && basis_[r] < basis_[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave == rows_) return false;
      basic[basis_[leave]] = 0;
      basic[enter] = 1;
      pivot(leave, enter, &reduced_);
    }
    throw InternalError("simplex iteration limit reached");
  }

  void pivot(std::size_t row, std::size_t col, std::vector<double>* reduced) {
    const double inv = 1.0 / cell(row, col);
    for (std::size_t j = 0; j < width_; ++j) cell(row, j) *= inv;
    cell(row, col) = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == row || !live_[r]) continue;
      const double factor = cell(r, col);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) cell(r, j) -= factor * cell(row, j);
      cell(r, col) = 0.0;
      if (cell(r, width_ - 1) < 0.0 && cell(r, width_ - 1) > -tol_) cell(r, width_ - 1) = 0.0;
    }
    if (reduced != nullptr) {
      const double factor = (*reduced)[col];
      if (factor != 0.0)
        for (std::size_t j = 0; j < width_; ++j) (*reduced)[j] -= factor * cell(row, j);
      (*reduced)[col] = 0.0;
    }
    basis_[row] = col;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::size_t total_;
  std::size_t width_;
  double tol_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
  std::vector<char> live_;
  std::vector<char> allowed_;
  std::vector<double> reduced_;
};

}  // namespace detail

/// Feasibility check followed by lexicographic minimization of
/// `problem.objectives`. `tolerance` is the feasibility and pivot tolerance.
inline Result solve(const Problem& problem, double tolerance = 1e-9) {
  detail::Tableau tableau(problem, tolerance);
  Result result;
  result.infeasibility = tableau.phase_one();
  if (result.infeasibility > tolerance) return result;
  tableau.drop_artificials();
  for (const auto& objective : problem.objectives) tableau.minimize_on_face(objective);
  result.feasible = true;
  result.x = tableau.solution();
  return result;
}

}  // namespace byzlearn::lp
