#pragma once

// Dense two-phase tableau simplex for small linear programs
//   minimize cᵀx  subject to  a_iᵀx ≤ b_i,  lo_j ≤ x_j ≤ hi_j.
// Bland's rule is used for both entering and leaving choices, so the method
// cannot cycle.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace safeban {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();
inline constexpr double kLpTolerance = 1e-9;
inline constexpr std::size_t kLpMaxVariables = 64;

struct LpConstraint {
    std::vector<double> row;
    double rhs = 0.0;
};

struct LpBound {
    double lo = 0.0;
    double hi = kLpInf;
};

struct LpProblem {
    std::vector<double> objective;
    std::vector<LpConstraint> inequalities;
    std::vector<LpBound> bounds;  // empty means x ≥ 0 for every variable

    std::size_t num_vars() const noexcept { return objective.size(); }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double value = 0.0;
};

namespace detail {

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows) {}

    double& at(std::size_t r, std::size_t c) noexcept { return t_[r * (n_ + 1) + c]; }
    double& rhs(std::size_t r) noexcept { return at(r, n_); }
    double& cost(std::size_t c) noexcept { return at(m_, c); }  // reduced-cost row
    std::size_t rows() const noexcept { return m_; }
    std::size_t cols() const noexcept { return n_; }
    std::vector<std::size_t>& basis() noexcept { return basis_; }

    void pivot(std::size_t r, std::size_t c) {
        const double p = at(r, c);
        for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double f = at(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
            at(i, c) = 0.0;
        }
        basis_[r] = c;
    }

    // Rebuild the reduced-cost row for cost vector `c` (length n_) given the basis.
    void price(const std::vector<double>& c) {
        for (std::size_t j = 0; j < n_; ++j) cost(j) = c[j];
        cost(n_) = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) at(m_, j) -= cb * at(i, j);
        }
    }

    // Returns false when unbounded. `allowed` masks columns that may enter.
    bool optimize(const std::vector<bool>& allowed) {
        for (std::size_t iter = 0; iter < 100000; ++iter) {
            std::size_t enter = n_;
            for (std::size_t j = 0; j < n_; ++j)
                if (allowed[j] && cost(j) < -kLpTolerance) {
                    enter = j;
                    break;
                }
            if (enter == n_) return true;
            std::size_t leave = m_;
            double best = kLpInf;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, enter);
                if (a <= kLpTolerance) continue;
                const double ratio = rhs(i) / a;
                if (leave == m_ || ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == m_) return false;
            pivot(leave, enter);
        }
        throw std::runtime_error("lp_solve: iteration limit reached");
    }

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
};

}  // namespace detail

inline LpResult lp_solve(const LpProblem& p) {
    const std::size_t n = p.num_vars();
    if (n == 0 || n > kLpMaxVariables) throw std::invalid_argument("lp_solve: variable count must be in [1, 64]");
    if (!p.bounds.empty() && p.bounds.size() != n) throw std::invalid_argument("lp_solve: bounds size mismatch");
    for (const auto& con : p.inequalities)
        if (con.row.size() != n) throw std::invalid_argument("lp_solve: constraint row size mismatch");

    // Map each original variable onto nonnegative columns: x = offset + sign·x' (or x⁺ - x⁻ when free).
    struct VarMap {
        double offset = 0.0;
        double sign = 1.0;
        std::size_t col = 0;
        bool free = false;
    };
    std::vector<VarMap> map(n);
    std::vector<LpConstraint> rows;
    std::size_t ncols = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const LpBound b = p.bounds.empty() ? LpBound{} : p.bounds[j];
        if (b.lo > b.hi) return {LpStatus::infeasible, {}, 0.0};
        VarMap& v = map[j];
        v.col = ncols;
        if (std::isfinite(b.lo)) {
            v.offset = b.lo;
            ++ncols;
        } else if (std::isfinite(b.hi)) {
            v.offset = b.hi;
            v.sign = -1.0;
            ++ncols;
        } else {
            v.free = true;
            ncols += 2;
        }
    }
    auto expand = [&](const std::vector<double>& row, double& shift) {
        std::vector<double> out(ncols, 0.0);
        shift = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const VarMap& v = map[j];
            shift += row[j] * v.offset;
            if (v.free) {
                out[v.col] = row[j];
                out[v.col + 1] = -row[j];
            } else {
                out[v.col] = v.sign * row[j];
            }
        }
        return out;
    };
    for (const auto& con : p.inequalities) {
        double shift = 0.0;
        auto r = expand(con.row, shift);
        rows.push_back({std::move(r), con.rhs - shift});
    }
    for (std::size_t j = 0; j < n; ++j) {
        const LpBound b = p.bounds.empty() ? LpBound{} : p.bounds[j];
        if (std::isfinite(b.lo) && std::isfinite(b.hi)) {
            std::vector<double> r(ncols, 0.0);
            r[map[j].col] = 1.0;
            rows.push_back({std::move(r), b.hi - b.lo});
        }
    }

    const std::size_t m = rows.size();
    std::size_t n_art = 0;
    for (const auto& r : rows)
        if (r.rhs < 0.0) ++n_art;
    const std::size_t slack0 = ncols, art0 = ncols + m, total = ncols + m + n_art;
    detail::Tableau tab(m, total);
    std::size_t art = art0;
    for (std::size_t i = 0; i < m; ++i) {
        const double s = rows[i].rhs < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < ncols; ++j) tab.at(i, j) = s * rows[i].row[j];
        tab.at(i, slack0 + i) = s;
        tab.rhs(i) = s * rows[i].rhs;
        if (s < 0.0) {
            tab.at(i, art) = 1.0;
            tab.basis()[i] = art++;
        } else {
            tab.basis()[i] = slack0 + i;
        }
    }

    std::vector<bool> allowed(total, true);
    if (n_art > 0) {
        std::vector<double> c1(total, 0.0);
        for (std::size_t j = art0; j < total; ++j) c1[j] = 1.0;
        tab.price(c1);
        tab.optimize(allowed);
        if (-tab.cost(total) > kLpTolerance) return {LpStatus::infeasible, {}, 0.0};
        // drive artificials out of the basis where possible
        for (std::size_t i = 0; i < m; ++i) {
            if (tab.basis()[i] < art0) continue;
            for (std::size_t j = 0; j < art0; ++j)
                if (std::abs(tab.at(i, j)) > kLpTolerance) {
                    tab.pivot(i, j);
                    break;
                }
        }
        for (std::size_t j = art0; j < total; ++j) allowed[j] = false;
    }

    std::vector<double> c2(total, 0.0);
    double c_shift = 0.0;
    {
        auto obj = expand(p.objective, c_shift);
        std::copy(obj.begin(), obj.end(), c2.begin());
    }
    tab.price(c2);
    if (!tab.optimize(allowed)) return {LpStatus::unbounded, {}, -kLpInf};

    std::vector<double> xp(total, 0.0);
    for (std::size_t i = 0; i < m; ++i) xp[tab.basis()[i]] = tab.rhs(i);
    LpResult res{LpStatus::optimal, std::vector<double>(n, 0.0), 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        const VarMap& v = map[j];
        res.x[j] = v.free ? xp[v.col] - xp[v.col + 1] : v.offset + v.sign * xp[v.col];
        res.value += p.objective[j] * res.x[j];
    }
    return res;
}

}  // namespace safeban
