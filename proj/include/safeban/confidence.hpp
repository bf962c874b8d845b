#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "safeban/linalg.hpp"

namespace safeban {

/// Constants of the self-normalized confidence radius
///   β_t = R √(d log((1 + (t-1)L²/λ) / δ)) + √λ S.
struct BetaSchedule {
    double R = 0.1;
    std::size_t d = 2;
    double L = 1.0;
    double lambda = 1.0;
    double S = 1.0;
    double delta = 0.01;

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("BetaSchedule: delta must lie in (0,1)");
        if (!(lambda > 0.0)) throw std::invalid_argument("BetaSchedule: lambda must be positive");
        if (!(R >= 0.0)) throw std::invalid_argument("BetaSchedule: R must be nonnegative");
    }
};

inline double beta(const BetaSchedule& s, std::uint64_t t) {
    if (t < 1) throw std::invalid_argument("beta: round must be >= 1");
    const double growth = 1.0 + static_cast<double>(t - 1) * s.L * s.L / s.lambda;
    return s.R * std::sqrt(static_cast<double>(s.d) * std::log(growth / s.delta)) + std::sqrt(s.lambda) * s.S;
}

enum class RegionKind { ell2, ell1 };

inline const char* to_string(RegionKind k) noexcept { return k == RegionKind::ell2 ? "ell2" : "ell1"; }

/// {v : ‖v - center‖_A ≤ β} (ell2) or {v : ‖A^{1/2}(v - center)‖₁ ≤ √d β} (ell1).
/// The ℓ1 region contains the ℓ2 region with the same β.
struct ConfidenceRegion {
    Vec center;
    Mat gram;
    Mat gram_inv;
    double radius = 0.0;
    RegionKind kind = RegionKind::ell2;

    ConfidenceRegion() = default;
    ConfidenceRegion(Vec c, Mat a, double r, RegionKind k)
        : center(c), gram(a), gram_inv(inverse_spd(a)), radius(r), kind(k) {}
    ConfidenceRegion(Vec c, Mat a, Mat a_inv, double r, RegionKind k)
        : center(c), gram(a), gram_inv(a_inv), radius(r), kind(k) {}

    std::size_t dim() const noexcept { return center.size(); }

    // √d·β for ell1, β for ell2: the multiplier of ‖w‖_{A⁻¹} in the linear bound.
    double effective_radius() const noexcept {
        return kind == RegionKind::ell1 ? std::sqrt(static_cast<double>(dim())) * radius : radius;
    }
};

inline bool contains(const ConfidenceRegion& r, const Vec& v, double tol = 1e-12) {
    const Vec diff = v - r.center;
    if (r.kind == RegionKind::ell2) return weighted_norm(diff, r.gram) <= r.radius + tol;
    return norm1(sqrt_spd(r.gram) * diff) <= r.effective_radius() + tol;
}

/// The 2d vertices center ± √d β A^{-1/2} e_j, ordered (+e_1, -e_1, +e_2, -e_2, ...).
inline std::vector<Vec> l1_vertices(const ConfidenceRegion& r) {
    if (r.kind != RegionKind::ell1) throw std::invalid_argument("l1_vertices: region is not ell1");
    const Mat p = inv_sqrt(r.gram);
    const double rho = r.effective_radius();
    std::vector<Vec> out;
    out.reserve(2 * r.dim());
    for (std::size_t j = 0; j < r.dim(); ++j) {
        const Vec step = p.col(j) * rho;
        out.push_back(r.center + step);
        out.push_back(r.center - step);
    }
    return out;
}

/// centerᵀw + ρ‖w‖_{A⁻¹} with ρ the effective radius. For ell2 this is the
/// exact support function; for ell1 it is the conservative 2-norm form.
inline double max_linear_over_region(const ConfidenceRegion& r, const Vec& w) {
    return dot(r.center, w) + r.effective_radius() * weighted_norm(w, r.gram_inv);
}

/// Largest α ∈ [0,1] with α(μᵀBx* + 2β‖Bx*‖_{A⁻¹}) ≤ c. Uses the hidden μ,
/// so it is a diagnostic only. Pass the effective radius for ℓ1 regions.
inline double alpha_t(const Vec& mu, const Mat& B, double c, const Vec& x_star, const Mat& gram, double beta_t) {
    const Vec bx = B * x_star;
    const double g = dot(mu, bx) + 2.0 * beta_t * weighted_norm(bx, inverse_spd(gram));
    if (g <= c) return 1.0;
    return std::clamp(c / g, 0.0, 1.0);
}

}  // namespace safeban
