#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace persuasion {

enum class Comparator { LessEqual, GreaterEqual, Equal };

struct LpRow {
  std::vector<std::pair<std::size_t, double>> coeffs;  // (variable, coefficient)
  Comparator cmp = Comparator::LessEqual;
  double rhs = 0.0;
};

// minimize c^T x subject to rows and per-variable bounds (default: free).
class LinearProgram {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::size_t add_variable(double cost = 0.0, double lower = -kInf, double upper = kInf) {
    objective_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return objective_.size() - 1;
  }

  void add_row(std::vector<std::pair<std::size_t, double>> coeffs, Comparator cmp, double rhs) {
    rows_.push_back(LpRow{std::move(coeffs), cmp, rhs});
  }

  void set_cost(std::size_t j, double c) { objective_[j] = c; }

  std::size_t num_variables() const noexcept { return objective_.size(); }
  const std::vector<double>& objective() const noexcept { return objective_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<LpRow>& rows() const noexcept { return rows_; }

 private:
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<LpRow> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct LpOptions {
  double pivot_tol = 1e-9;        // smallest acceptable pivot element
  double cost_tol = 1e-9;         // reduced-cost optimality threshold
  double primal_tol = 1e-9;       // Harris ratio-test slack
  double feasibility_tol = 1e-7;  // accepted constraint violation of the answer
  std::size_t degenerate_streak = 50;  // switch to Bland's rule after this many
};

namespace detail {

// Dense simplex tableau over a standard-form problem
//   min c^T y  s.t.  A y = b, y >= 0, b >= 0
// whose initial basis is given. Pivots skip zero entries of the pivot column
// and row, which keeps block-structured problems cheap.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), width_(cols + 1), t_(rows * (cols + 1), 0.0), basis_(rows, 0),
        cost_row_(cols + 1, 0.0), allowed_(cols, true) {}

  double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
  double& rhs(std::size_t i) { return t_[i * width_ + n_]; }
  double rhs(std::size_t i) const { return t_[i * width_ + n_]; }

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::vector<bool>& allowed() { return allowed_; }

  // Reduced costs d_j = c_j - c_B^T B^-1 A_j; the last entry holds -objective.
  void price(const std::vector<double>& cost) {
    std::fill(cost_row_.begin(), cost_row_.end(), 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost_row_[j] = cost[j];
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &t_[i * width_];
      for (std::size_t j = 0; j <= n_; ++j) cost_row_[j] -= cb * row[j];
    }
  }

  void pivot(std::size_t r, std::size_t col) {
    double* prow = &t_[r * width_];
    const double inv = 1.0 / prow[col];
    nz_.clear();
    for (std::size_t j = 0; j <= n_; ++j) {
      if (prow[j] == 0.0) continue;
      prow[j] *= inv;
      if (std::abs(prow[j]) < 1e-14) {
        prow[j] = 0.0;
        continue;
      }
      nz_.push_back(j);
    }
    prow[col] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[i * width_];
      const double f = row[col];
      if (f == 0.0) continue;
      for (std::size_t j : nz_) {
        double v = row[j] - f * prow[j];
        row[j] = std::abs(v) < 1e-14 ? 0.0 : v;
      }
      row[col] = 0.0;
    }
    const double f = cost_row_[col];
    if (f != 0.0) {
      for (std::size_t j : nz_) cost_row_[j] -= f * prow[j];
      cost_row_[col] = 0.0;
    }
    basis_[r] = col;
  }

  enum class Outcome { Optimal, Unbounded, IterationLimit };

  Outcome run(const LpOptions& opt, std::size_t& iterations, std::size_t limit) {
    std::size_t streak = 0;
    bool bland = false;
    while (iterations < limit) {
      std::size_t enter = n_;
      double most = -opt.cost_tol;
      for (std::size_t j = 0; j < n_; ++j) {
        if (!allowed_[j]) continue;
        const double d = cost_row_[j];
        if (d < most) {
          enter = j;
          if (bland) break;
          most = d;
        }
      }
      if (enter == n_) return Outcome::Optimal;

      // Harris two-pass ratio test.
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a > opt.pivot_tol) bound = std::min(bound, (std::max(rhs(i), 0.0) + opt.primal_tol) / a);
      }
      if (!std::isfinite(bound)) return Outcome::Unbounded;
      std::size_t leave = m_;
      double best_a = 0.0;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= opt.pivot_tol) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        if (ratio > bound) continue;
        if (bland) {
          if (ratio < best_ratio ||
              (ratio == best_ratio && basis_[i] < basis_[leave])) {
            best_ratio = ratio;
            leave = i;
          }
        } else if (a > best_a) {
          best_a = a;
          best_ratio = ratio;
          leave = i;
        }
      }
      if (best_ratio <= 1e-12) {
        if (++streak > opt.degenerate_streak) bland = true;
      } else {
        streak = 0;
        bland = false;
      }
      pivot(leave, enter);
      ++iterations;
    }
    return Outcome::IterationLimit;
  }

  double objective() const { return -cost_row_[n_]; }

 private:
  std::size_t m_;
  std::size_t n_;
  std::size_t width_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
  std::vector<double> cost_row_;
  std::vector<bool> allowed_;
  std::vector<std::size_t> nz_;
};

// x_j = offset + sum over (column, sign) of sign * y_column.
struct VarMap {
  double offset = 0.0;
  std::vector<std::pair<std::size_t, double>> cols;
};

}  // namespace detail

// Solves the LP with a two-phase primal simplex. The returned point is
// recomputed from the final basis by a sparse LU solve, so that constraints
// active at the optimal vertex hold to working precision. Deterministic.
inline LpSolution lp_solve(const LinearProgram& lp, const LpOptions& opt = {}) {
  using detail::VarMap;
  const std::size_t nvars = lp.num_variables();
  LpSolution out;

  // Variables -> nonnegative columns.
  std::vector<VarMap> vars(nvars);
  std::vector<double> cost;
  std::vector<LpRow> rows;
  std::size_t ncols = 0;
  for (std::size_t j = 0; j < nvars; ++j) {
    const double lo = lp.lower()[j];
    const double hi = lp.upper()[j];
    if (lo > hi) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    if (std::isfinite(lo) && lo == hi) {
      vars[j].offset = lo;
    } else if (std::isfinite(lo)) {
      vars[j] = {lo, {{ncols++, 1.0}}};
      if (std::isfinite(hi)) rows.push_back(LpRow{{{ncols - 1, 1.0}}, Comparator::LessEqual, hi - lo});
    } else if (std::isfinite(hi)) {
      vars[j] = {hi, {{ncols++, -1.0}}};
    } else {
      vars[j] = {0.0, {{ncols, 1.0}, {ncols + 1, -1.0}}};
      ncols += 2;
    }
  }
  cost.assign(ncols, 0.0);
  double cost_offset = 0.0;
  for (std::size_t j = 0; j < nvars; ++j) {
    cost_offset += lp.objective()[j] * vars[j].offset;
    for (auto [c, sgn] : vars[j].cols) cost[c] += lp.objective()[j] * sgn;
  }
  for (const auto& r : lp.rows()) {
    LpRow out_row{{}, r.cmp, r.rhs};
    for (auto [j, a] : r.coeffs) {
      if (a == 0.0) continue;
      out_row.rhs -= a * vars[j].offset;
      for (auto [c, sgn] : vars[j].cols) out_row.coeffs.emplace_back(c, a * sgn);
    }
    rows.push_back(std::move(out_row));
  }

  // Merge duplicates, make rhs >= 0, prefer <= for homogeneous >= rows.
  for (auto& r : rows) {
    std::sort(r.coeffs.begin(), r.coeffs.end());
    std::vector<std::pair<std::size_t, double>> merged;
    for (auto [c, a] : r.coeffs) {
      if (!merged.empty() && merged.back().first == c) merged.back().second += a;
      else merged.emplace_back(c, a);
    }
    std::erase_if(merged, [](const auto& p) { return p.second == 0.0; });
    r.coeffs = std::move(merged);
    const bool flip = r.rhs < 0.0 || (r.rhs == 0.0 && r.cmp == Comparator::GreaterEqual);
    if (flip) {
      r.rhs = -r.rhs;
      for (auto& p : r.coeffs) p.second = -p.second;
      if (r.cmp == Comparator::LessEqual) r.cmp = Comparator::GreaterEqual;
      else if (r.cmp == Comparator::GreaterEqual) r.cmp = Comparator::LessEqual;
    }
  }

  const std::size_t m = rows.size();
  std::vector<std::size_t> col_count(ncols, 0);
  for (const auto& r : rows)
    for (auto [c, a] : r.coeffs) ++col_count[c];

  // Column layout: structural | slack/surplus | artificial.
  std::vector<std::size_t> slack_col(m, SIZE_MAX), art_col(m, SIZE_MAX), basic(m, SIZE_MAX);
  std::vector<double> scale(m, 1.0);
  std::vector<bool> used(ncols, false);
  std::size_t total = ncols;
  for (std::size_t i = 0; i < m; ++i)
    if (rows[i].cmp != Comparator::Equal) slack_col[i] = total++;
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].cmp == Comparator::LessEqual) {
      basic[i] = slack_col[i];
      continue;
    }
    for (auto [c, a] : rows[i].coeffs) {
      if (col_count[c] == 1 && a > 0.0 && !used[c]) {
        used[c] = true;
        basic[i] = c;
        scale[i] = 1.0 / a;
        break;
      }
    }
  }
  const std::size_t first_art = total;
  for (std::size_t i = 0; i < m; ++i) {
    if (basic[i] == SIZE_MAX) {
      art_col[i] = total++;
      basic[i] = art_col[i];
    }
  }

  detail::Tableau tab(m, total);
  for (std::size_t i = 0; i < m; ++i) {
    for (auto [c, a] : rows[i].coeffs) tab.at(i, c) = a * scale[i];
    if (slack_col[i] != SIZE_MAX)
      tab.at(i, slack_col[i]) = (rows[i].cmp == Comparator::LessEqual ? 1.0 : -1.0) * scale[i];
    if (art_col[i] != SIZE_MAX) tab.at(i, art_col[i]) = 1.0;
    tab.rhs(i) = rows[i].rhs * scale[i];
    tab.basis()[i] = basic[i];
  }

  const std::size_t limit = 50 * (m + total) + 1000;
  std::vector<double> full_cost(total, 0.0);

  if (first_art < total) {
    std::vector<double> phase1(total, 0.0);
    for (std::size_t c = first_art; c < total; ++c) phase1[c] = 1.0;
    tab.price(phase1);
    const auto res = tab.run(opt, out.iterations, limit);
    if (res == detail::Tableau::Outcome::IterationLimit) {
      out.status = LpStatus::NumericalFailure;
      return out;
    }
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (tab.basis()[i] >= first_art) infeas += std::max(tab.rhs(i), 0.0);
    if (infeas > opt.feasibility_tol) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] < first_art) continue;
      std::size_t best = total;
      double mag = opt.pivot_tol;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::abs(tab.at(i, j)) > mag) {
          mag = std::abs(tab.at(i, j));
          best = j;
        }
      }
      if (best < total) tab.pivot(i, best);
      else tab.rhs(i) = 0.0;  // redundant row
    }
    for (std::size_t c = first_art; c < total; ++c) tab.allowed()[c] = false;
  }

  for (std::size_t c = 0; c < ncols; ++c) full_cost[c] = cost[c];
  tab.price(full_cost);
  const auto res = tab.run(opt, out.iterations, limit);
  if (res == detail::Tableau::Outcome::Unbounded) {
    out.status = LpStatus::Unbounded;
    return out;
  }
  if (res == detail::Tableau::Outcome::IterationLimit) {
    out.status = LpStatus::NumericalFailure;
    return out;
  }

  // Column-major standard-form matrix for refactorization and checking.
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(total);
  for (std::size_t i = 0; i < m; ++i) {
    for (auto [c, a] : rows[i].coeffs) columns[c].emplace_back(i, a);
    if (slack_col[i] != SIZE_MAX)
      columns[slack_col[i]].emplace_back(i, rows[i].cmp == Comparator::LessEqual ? 1.0 : -1.0);
    if (art_col[i] != SIZE_MAX) columns[art_col[i]].emplace_back(i, 1.0);
  }

  auto violation = [&](const std::vector<double>& y) {
    std::vector<double> act(m, 0.0);
    double worst = 0.0;
    for (std::size_t c = 0; c < total; ++c) {
      if (y[c] == 0.0) continue;
      worst = std::max(worst, -y[c]);
      for (auto [i, a] : columns[c]) act[i] += a * y[c];
    }
    for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, std::abs(act[i] - rows[i].rhs));
    return worst;
  };

  std::vector<double> y_tab(total, 0.0);
  for (std::size_t i = 0; i < m; ++i) y_tab[tab.basis()[i]] = tab.rhs(i);

  std::vector<double> y = y_tab;
  if (m > 0) {
    using SpMat = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < m; ++k)
      for (auto [i, a] : columns[tab.basis()[k]])
        trip.emplace_back(static_cast<int>(i), static_cast<int>(k), a);
    SpMat basis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    basis.setFromTriplets(trip.begin(), trip.end());
    basis.makeCompressed();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(basis);
    lu.factorize(basis);
    if (lu.info() == Eigen::Success) {
      Eigen::VectorXd b(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) b(static_cast<Eigen::Index>(i)) = rows[i].rhs;
      Eigen::VectorXd xb = lu.solve(b);
      if (lu.info() == Eigen::Success && xb.allFinite()) {
        std::vector<double> y_lu(total, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
          double v = xb(static_cast<Eigen::Index>(k));
          if (v < 0.0 && v > -opt.feasibility_tol) v = 0.0;
          y_lu[tab.basis()[k]] = v;
        }
        if (violation(y_lu) <= violation(y_tab)) y = std::move(y_lu);
      }
    }
  }
  for (std::size_t c = first_art; c < total; ++c) {
    if (std::abs(y[c]) > opt.feasibility_tol) {
      out.status = LpStatus::NumericalFailure;
      return out;
    }
    y[c] = 0.0;
  }
  if (violation(y) > opt.feasibility_tol) {
    out.status = LpStatus::NumericalFailure;
    return out;
  }

  out.x.assign(nvars, 0.0);
  for (std::size_t j = 0; j < nvars; ++j) {
    double v = vars[j].offset;
    for (auto [c, sgn] : vars[j].cols) v += sgn * y[c];
    out.x[j] = v;
  }
  out.objective = cost_offset;
  for (std::size_t c = 0; c < ncols; ++c) out.objective += cost[c] * y[c];
  out.status = LpStatus::Optimal;
  return out;
}

}  // namespace persuasion
