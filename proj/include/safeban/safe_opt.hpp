#pragma once

// Estimated safe sets and the optimistic action choice over them.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "safeban/confidence.hpp"
#include "safeban/environment.hpp"
#include "safeban/errors.hpp"
#include "safeban/linalg.hpp"
#include "safeban/lp.hpp"

namespace safeban {

struct OfuResult {
    Vec action;
    Vec optimist;  // μ̃, the minimizing parameter in the region
    double value = 0.0;
    std::size_t safe_count = 0;
    std::size_t arm_index = 0;  // finite sets only
};

/// D^w membership: x in the action set and ‖Bx‖₂ ≤ c/S.
inline bool warmup_member(const Mat& B, double c, double S, const Vec& x, const ActionSet& action_set) {
    const bool in_set = std::visit(
        [&](const auto& set) {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, FiniteArms>) {
                for (const auto& y : set.vectors)
                    if (y == x) return true;
                return false;
            } else if constexpr (std::is_same_v<T, BoxPolytope>) {
                return in_box(set, x);
            } else {
                return true;  // contextual: membership is decided per round by the caller
            }
        },
        action_set);
    return in_set && norm2(B * x) <= c / S;
}

/// x is certified safe against every parameter of the region.
inline bool declared_safe(const ConfidenceRegion& region, const Mat& B, double c, const Vec& x) {
    return max_linear_over_region(region, B * x) <= c;
}

inline std::vector<std::size_t> safe_members_finite(const ConfidenceRegion& region, const Mat& B, double c,
                                                    const std::vector<Vec>& arms) {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < arms.size(); ++a)
        if (declared_safe(region, B, c, arms[a])) out.push_back(a);
    return out;
}

/// Joint minimization of vᵀy over certified-safe arms y and parameters v in the region.
/// ell2 uses the closed form centerᵀy - β‖y‖_{A⁻¹}; ell1 scans the 2d vertices.
inline OfuResult ofu_finite(const ConfidenceRegion& region, const Mat& B, double c, const std::vector<Vec>& arms) {
    const auto safe = safe_members_finite(region, B, c, arms);
    if (safe.empty()) throw NoSafeActionError("ofu_finite: estimated safe set is empty");

    OfuResult best;
    best.value = std::numeric_limits<double>::infinity();
    best.safe_count = safe.size();
    if (region.kind == RegionKind::ell2) {
        for (std::size_t a : safe) {
            const Vec& y = arms[a];
            const Vec ay = region.gram_inv * y;
            const double nrm = std::sqrt(std::max(0.0, dot(y, ay)));
            const double val = dot(region.center, y) - region.radius * nrm;
            if (val < best.value) {
                best.value = val;
                best.arm_index = a;
                best.action = y;
                best.optimist = nrm > 0.0 ? region.center - ay * (region.radius / nrm) : region.center;
            }
        }
        return best;
    }
    const auto verts = l1_vertices(region);
    for (std::size_t a : safe) {
        for (const auto& v : verts) {
            const double val = dot(v, arms[a]);
            if (val < best.value) {
                best.value = val;
                best.arm_index = a;
                best.action = arms[a];
                best.optimist = v;
            }
        }
    }
    return best;
}

/// OFU over a gridded box with an ℓ1 region. The grid and the products Bx are
/// built once; each solve tests every grid point for certified safety, then
/// minimizes v_iᵀx over the safe points for each of the 2d region vertices.
class PolytopeOfuSolver {
public:
    PolytopeOfuSolver(const Mat& B, const BoxPolytope& box) : grid_(box), d_(box.lower.size()) {
        const auto& pts = grid_.points();
        xs_.reserve(pts.size() * d_);
        bx_.reserve(pts.size() * d_);
        for (const auto& x : pts) {
            const Vec w = B * x;
            for (std::size_t j = 0; j < d_; ++j) {
                xs_.push_back(x[j]);
                bx_.push_back(w[j]);
            }
        }
    }

    const BoxGrid& grid() const noexcept { return grid_; }

    // Safe mask of the grid under `region`.
    std::vector<char> safe_mask(const ConfidenceRegion& region, double c) const {
        collect(region, c);
        std::vector<char> mask(grid_.points().size(), 0);
        for (std::size_t i : safe_) mask[i] = 1;
        return mask;
    }

    OfuResult solve(const ConfidenceRegion& region, double c) const {
        if (region.kind != RegionKind::ell1) throw std::invalid_argument("ofu_l1_polytope: region must be ell1");
        collect(region, c);
        if (safe_.empty()) throw NoSafeActionError("ofu_l1_polytope: no grid point is certified safe");

        const auto verts = l1_vertices(region);
        OfuResult best;
        best.value = std::numeric_limits<double>::infinity();
        best.safe_count = safe_.size();
        std::size_t best_pt = 0, best_v = 0;
        // Per vertex, the first safe point (grid order) attaining the minimum; then
        // the overall minimum with ties to the smaller point, then the smaller vertex.
        for (std::size_t k = 0; k < verts.size(); ++k) {
            const auto [val, pt] = vertex_min(verts[k]);
            if (val < best.value || (val == best.value && pt < best_pt)) {
                best.value = val;
                best_pt = pt;
                best_v = k;
            }
        }
        best.action = grid_.points()[best_pt];
        best.optimist = verts[best_v];
        best.arm_index = best_pt;
        return best;
    }

private:
    void collect(const ConfidenceRegion& region, double c) const {
        safe_.clear();
        switch (d_) {
            case 2: collect_safe<2>(region, c); break;
            case 3: collect_safe<3>(region, c); break;
            default:
                for (std::size_t i = 0; i < grid_.points().size(); ++i) {
                    Vec w(d_);
                    for (std::size_t j = 0; j < d_; ++j) w[j] = bx_[i * d_ + j];
                    if (max_linear_over_region(region, w) <= c) safe_.push_back(i);
                }
        }
    }

    // Same arithmetic, in the same order, as max_linear_over_region; the
    // dimension is a compile-time constant so the loops unroll.
    template <std::size_t D>
    void collect_safe(const ConfidenceRegion& region, double c) const {
        std::array<double, D> ctr{};
        std::array<double, D * D> m{};
        for (std::size_t i = 0; i < D; ++i) {
            ctr[i] = region.center[i];
            for (std::size_t j = 0; j < D; ++j) m[i * D + j] = region.gram_inv(i, j);
        }
        const double rho = region.effective_radius();
        const std::size_t n = bx_.size() / D;
        const double* w = bx_.data();
        for (std::size_t p = 0; p < n; ++p, w += D) {
            double lin = 0.0, q = 0.0;
            for (std::size_t i = 0; i < D; ++i) lin += ctr[i] * w[i];
            for (std::size_t i = 0; i < D; ++i) {
                double r = 0.0;
                for (std::size_t j = 0; j < D; ++j) r += m[i * D + j] * w[j];
                q += w[i] * r;
            }
            if (lin + rho * std::sqrt(q < 0.0 ? 0.0 : q) <= c) safe_.push_back(p);
        }
    }

    // Minimum of vᵀx over the safe points, same summation order as dot().
    std::pair<double, std::size_t> vertex_min(const Vec& v) const {
        switch (d_) {
            case 2: return vertex_min_fixed<2>(v);
            case 3: return vertex_min_fixed<3>(v);
            default: break;
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i : safe_) {
            double s = 0.0;
            for (std::size_t j = 0; j < d_; ++j) s += v[j] * xs_[i * d_ + j];
            if (s < best) {
                best = s;
                arg = i;
            }
        }
        return {best, arg};
    }

    template <std::size_t D>
    std::pair<double, std::size_t> vertex_min_fixed(const Vec& v) const {
        std::array<double, D> vv{};
        for (std::size_t j = 0; j < D; ++j) vv[j] = v[j];
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i : safe_) {
            const double* x = xs_.data() + i * D;
            double s = 0.0;
            for (std::size_t j = 0; j < D; ++j) s += vv[j] * x[j];
            if (s < best) {
                best = s;
                arg = i;
            }
        }
        return {best, arg};
    }

    BoxGrid grid_;
    std::size_t d_;
    std::vector<double> xs_;  // grid points, flattened
    std::vector<double> bx_;  // B x for each grid point, flattened
    mutable std::vector<std::size_t> safe_;
};

inline OfuResult ofu_l1_polytope(const ConfidenceRegion& region, const Mat& B, double c, const BoxPolytope& box) {
    return PolytopeOfuSolver(B, box).solve(region, c);
}

namespace detail {

// LP over u = A^{1/2}(v - center) restricted to the ℓ1 ball ‖u‖₁ ≤ ρ, written
// with u = u⁺ - u⁻ (2d nonnegative variables). Cuts are gᵀu ≤ h.
struct L1BallLp {
    std::size_t d;
    double rho;
    std::vector<std::pair<Vec, double>> cuts;

    // max gᵀu over the ball ∩ cuts; nullopt when infeasible
    std::optional<double> maximize(const Vec& g) const {
        LpProblem p;
        p.objective.assign(2 * d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            p.objective[j] = -g[j];
            p.objective[d + j] = g[j];
        }
        p.inequalities.push_back({std::vector<double>(2 * d, 1.0), rho});
        for (const auto& [a, h] : cuts) {
            std::vector<double> row(2 * d);
            for (std::size_t j = 0; j < d; ++j) {
                row[j] = a[j];
                row[d + j] = -a[j];
            }
            p.inequalities.push_back({std::move(row), h});
        }
        const auto r = lp_solve(p);
        if (r.status == LpStatus::infeasible) return std::nullopt;
        if (r.status == LpStatus::unbounded) throw std::logic_error("L1BallLp: bounded LP reported unbounded");
        return -r.value;
    }
};

}  // namespace detail

/// Lower confidence bound on the safety gap for a finite arm set, from an ℓ1 region.
/// For each arm i: C^i = region ∩ {vᵀBy_i ≤ c}; Y^i = arms certified safe over C^i;
/// Δ^i = min over v ∈ C^i making y_i optimal within Y^i of c - vᵀBy_i.
/// Returns max(0, min_i Δ^i), or 0 when every C^i is empty.
inline double gap_lower_bound_karmed(const ConfidenceRegion& region, const Mat& B, double c, const std::vector<Vec>& arms) {
    if (region.kind != RegionKind::ell1) throw std::invalid_argument("gap_lower_bound_karmed: region must be ell1");
    const std::size_t d = region.dim();
    const Mat P = inv_sqrt(region.gram);
    const double rho = region.effective_radius();
    const std::size_t K = arms.size();

    std::vector<Vec> g(K);     // P B y_j
    std::vector<double> h(K);  // c - centerᵀ B y_j
    for (std::size_t j = 0; j < K; ++j) {
        const Vec w = B * arms[j];
        g[j] = P * w;
        h[j] = c - dot(region.center, w);
    }

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < K; ++i) {
        // C^i empty iff even the most favourable u violates the cut
        if (-rho * norm_inf(g[i]) > h[i] + kLpTolerance) continue;
        detail::L1BallLp lp{d, rho, {{g[i], h[i]}}};

        std::vector<std::size_t> Y;
        for (std::size_t j = 0; j < K; ++j) {
            if (rho * norm_inf(g[j]) <= h[j]) {  // safe over the whole ball already
                Y.push_back(j);
                continue;
            }
            const auto m = lp.maximize(g[j]);
            if (m && *m <= h[j]) Y.push_back(j);
        }

        detail::L1BallLp opt = lp;
        for (std::size_t j : Y) {
            if (j == i) continue;
            const Vec diff = arms[i] - arms[j];
            opt.cuts.emplace_back(P * diff, -dot(region.center, diff));
        }
        const auto m = opt.maximize(g[i]);
        if (!m) continue;
        best = std::min(best, h[i] - *m);
    }
    if (!std::isfinite(best)) return 0.0;
    return std::max(0.0, best);
}

}  // namespace safeban
