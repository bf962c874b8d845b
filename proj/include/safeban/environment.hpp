#pragma once

// Ground truth of a safe linear bandit: hidden parameter μ, linear safety
// constraint μᵀBx ≤ c, sub-Gaussian loss noise, and the action sets.
// Policies only ever see a PublicView.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "safeban/errors.hpp"
#include "safeban/linalg.hpp"
#include "safeban/random.hpp"

namespace safeban {

struct FiniteArms {
    std::vector<Vec> vectors;
};

struct BoxPolytope {
    Vec lower;
    Vec upper;
    std::size_t grid_resolution = 101;
};

// K fresh arms per round: n_warmup drawn uniformly from D^w ∩ unit ball,
// the rest uniformly from the unit ball outside D^w. Deterministic in (seed, t).
struct Contextual {
    std::size_t K = 15;
    std::size_t n_warmup = 5;
    std::uint64_t seed = 0;
};

using ActionSet = std::variant<FiniteArms, BoxPolytope, Contextual>;

enum class NoiseKind { Gaussian, Uniform };

inline constexpr std::size_t kDefaultGridResolution = 101;
inline constexpr std::size_t kMaxGridPoints = 4'000'000;

/// Regular grid over a box, points in lexicographic order (first axis major).
/// The resolution is forced odd so a symmetric box has the origin on the grid.
class BoxGrid {
public:
    BoxGrid() = default;
    explicit BoxGrid(const BoxPolytope& box) : box_(box) {
        res_ = box.grid_resolution | 1u;
        if (res_ < 3) res_ = 3;
        const std::size_t d = box.lower.size();
        std::size_t total = 1;
        for (std::size_t j = 0; j < d; ++j) {
            if (total > kMaxGridPoints / res_)
                throw ConfigError("box grid too large: resolution^d exceeds " + std::to_string(kMaxGridPoints));
            total *= res_;
        }
        points_.reserve(total);
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t n = 0; n < total; ++n) {
            Vec x(d);
            for (std::size_t j = 0; j < d; ++j) x[j] = coordinate(j, idx[j]);
            points_.push_back(x);
            for (std::size_t j = d; j-- > 0;) {
                if (++idx[j] < res_) break;
                idx[j] = 0;
            }
        }
    }

    std::size_t resolution() const noexcept { return res_; }
    const std::vector<Vec>& points() const noexcept { return points_; }
    double step(std::size_t axis) const noexcept {
        return (box_.upper[axis] - box_.lower[axis]) / static_cast<double>(res_ - 1);
    }
    double coordinate(std::size_t axis, std::size_t k) const noexcept {
        if (k + 1 == res_) return box_.upper[axis];
        return box_.lower[axis] + static_cast<double>(k) * step(axis);
    }

private:
    BoxPolytope box_;
    std::size_t res_ = 0;
    std::vector<Vec> points_;
};

// What a learner may know about the instance.
struct PublicView {
    std::size_t d = 0;
    Mat B;
    double c = 0.0;
    double S = 0.0;
    double L = 0.0;
    double R = 0.0;
    ActionSet action_set;
};

struct OptimalAction {
    Vec x;
    double value = 0.0;
    std::size_t index = 0;  // arm index for finite sets
};

struct InstanceParams {
    Vec mu;
    Mat B;
    double c = 0.0;
    double R = 0.1;
    std::optional<double> S;  // defaults to ‖μ‖₂
    std::optional<double> L;  // defaults to the max action norm
    ActionSet action_set;
    NoiseKind noise = NoiseKind::Gaussian;
};

inline bool in_box(const BoxPolytope& box, const Vec& x, double tol = 1e-12) noexcept {
    for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j] < box.lower[j] - tol || x[j] > box.upper[j] + tol) return false;
    return true;
}

// Uniform draw from {x : ‖Bx‖₂ ≤ radius, ‖x‖₂ ≤ 1}. Maps the unit ball through
// radius·B⁻¹ when B is invertible, falling back to rejection from the unit ball.
inline Vec sample_warmup_in_ball(const Mat& B, double radius, RandomStream& rng) {
    const std::size_t d = B.size();
    std::optional<Mat> b_inv;
    try {
        b_inv = inverse(B);
    } catch (const NumericDomainError&) {
    }
    if (b_inv) {
        for (int i = 0; i < 10000; ++i) {
            Vec x = (*b_inv * rng.in_unit_ball(d)) * radius;
            if (norm2(x) <= 1.0) return x;
        }
    }
    for (int i = 0; i < 1'000'000; ++i) {
        Vec x = rng.in_unit_ball(d);
        if (norm2(B * x) <= radius) return x;
    }
    throw EnvironmentContractError("warm-up arm generation exhausted its retry budget");
}

class ProblemInstance {
public:
    explicit ProblemInstance(InstanceParams p) : p_(std::move(p)) {
        const std::size_t d = p_.mu.size();
        if (d == 0 || p_.B.size() != d) throw ConfigError("instance: mu and B dimensions disagree");
        if (!(p_.c > 0.0)) throw ConfigError("instance: constraint level c must be positive");
        if (!(p_.R >= 0.0)) throw ConfigError("instance: noise scale R must be nonnegative");
        S_ = p_.S.value_or(norm2(p_.mu));
        if (norm2(p_.mu) > S_ * (1.0 + 1e-12) + 1e-15) throw ConfigError("instance: ||mu|| exceeds S");
        if (!(S_ > 0.0)) throw ConfigError("instance: S must be positive");

        double max_norm = 0.0;
        double max_abs_loss = 0.0;
        std::visit(
            [&](const auto& set) {
                using T = std::decay_t<decltype(set)>;
                if constexpr (std::is_same_v<T, FiniteArms>) {
                    if (set.vectors.empty()) throw ConfigError("instance: finite arm set is empty");
                    for (const auto& y : set.vectors) {
                        if (y.size() != d) throw ConfigError("instance: arm dimension mismatch");
                        max_norm = std::max(max_norm, norm2(y));
                        max_abs_loss = std::max(max_abs_loss, std::abs(dot(p_.mu, y)));
                    }
                } else if constexpr (std::is_same_v<T, BoxPolytope>) {
                    if (set.lower.size() != d || set.upper.size() != d) throw ConfigError("instance: box dimension mismatch");
                    Vec corner(d);
                    for (std::size_t j = 0; j < d; ++j) {
                        if (!(set.lower[j] < 0.0 && set.upper[j] > 0.0))
                            throw ConfigError("instance: box must contain the origin in its interior");
                        const double m = std::max(-set.lower[j], set.upper[j]);
                        corner[j] = m;
                        max_abs_loss += std::abs(p_.mu[j]) * m;
                    }
                    max_norm = norm2(corner);
                } else {
                    if (set.K == 0 || set.n_warmup == 0 || set.n_warmup > set.K)
                        throw ConfigError("instance: contextual set needs 1 <= n_warmup <= K");
                    max_norm = 1.0;
                    max_abs_loss = norm2(p_.mu);
                }
            },
            p_.action_set);
        L_ = p_.L.value_or(max_norm);
        if (max_norm > L_ * (1.0 + 1e-12)) throw ConfigError("instance: an action exceeds the norm bound L");
        max_abs_loss_ = max_abs_loss;
        if (max_abs_loss > 1.0)
            warnings_.push_back("|mu^T x| reaches " + std::to_string(max_abs_loss) + " > 1 on the action set");
    }

    std::size_t dim() const noexcept { return p_.mu.size(); }
    const Vec& mu() const noexcept { return p_.mu; }
    const Mat& B() const noexcept { return p_.B; }
    double c() const noexcept { return p_.c; }
    double R() const noexcept { return p_.R; }
    double S() const noexcept { return S_; }
    double L() const noexcept { return L_; }
    NoiseKind noise() const noexcept { return p_.noise; }
    const ActionSet& action_set() const noexcept { return p_.action_set; }
    const InstanceParams& params() const noexcept { return p_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    // Largest |μᵀx| over the action set; bounds the per-round regret by twice this.
    double max_abs_loss() const noexcept { return max_abs_loss_; }

    PublicView public_view() const { return PublicView{dim(), p_.B, p_.c, S_, L_, p_.R, p_.action_set}; }

    double expected_loss(const Vec& x) const noexcept { return dot(p_.mu, x); }
    double constraint_value(const Vec& x) const noexcept { return dot(p_.mu, p_.B * x); }

private:
    InstanceParams p_;
    double S_ = 0.0;
    double L_ = 0.0;
    double max_abs_loss_ = 0.0;
    std::vector<std::string> warnings_;
};

/// ℓ = μᵀx + η with η from the instance's noise model.
inline double sample_loss(const ProblemInstance& inst, const Vec& x, RandomStream& rng) {
    const double mean = inst.expected_loss(x);
    if (inst.R() == 0.0) return mean;
    if (inst.noise() == NoiseKind::Uniform) {
        const double h = inst.R() * std::sqrt(3.0);
        return mean + rng.uniform(-h, h);
    }
    return mean + inst.R() * rng.normal();
}

/// Ground-truth safety oracle: μᵀBx ≤ c. Evaluation only.
inline bool is_safe(const ProblemInstance& inst, const Vec& x) noexcept { return inst.constraint_value(x) <= inst.c(); }

/// Index and expected loss of the best truly safe arm (lowest index on ties).
inline std::pair<std::size_t, double> per_round_optimum(const ProblemInstance& inst, const std::vector<Vec>& arms) {
    std::optional<std::size_t> best;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < arms.size(); ++a) {
        if (!is_safe(inst, arms[a])) continue;
        const double v = inst.expected_loss(arms[a]);
        if (v < best_val) {
            best_val = v;
            best = a;
        }
    }
    if (!best) throw EnvironmentContractError("per_round_optimum: no truly safe arm in the context");
    return {*best, best_val};
}

namespace detail {

inline OptimalAction box_optimum(const ProblemInstance& inst, const BoxPolytope& box, std::size_t resolution) {
    BoxPolytope b = box;
    b.grid_resolution = resolution;
    const BoxGrid grid(b);
    const auto& pts = grid.points();
    std::size_t best = pts.size();
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!is_safe(inst, pts[i])) continue;
        const double v = inst.expected_loss(pts[i]);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    // The origin is always safe, so a safe point exists once the grid contains it;
    // otherwise fall back to the origin itself.
    Vec x = best < pts.size() ? pts[best] : Vec::zeros(inst.dim());
    if (best == pts.size()) best_val = 0.0;

    // one refinement pass along each axis on [x_j - step, x_j + step]
    constexpr int kRefine = 50;
    for (std::size_t j = 0; j < inst.dim(); ++j) {
        const double h = grid.step(j);
        Vec cand_best = x;
        for (int s = -kRefine; s <= kRefine; ++s) {
            Vec y = x;
            y[j] = x[j] + h * static_cast<double>(s) / kRefine;
            if (y[j] < box.lower[j] || y[j] > box.upper[j] || !is_safe(inst, y)) continue;
            const double v = inst.expected_loss(y);
            if (v < best_val) {
                best_val = v;
                cand_best = y;
            }
        }
        x = cand_best;
    }
    return {x, best_val, 0};
}

}  // namespace detail

/// x* = argmin over truly safe actions of μᵀx. Finite sets are enumerated exactly;
/// boxes use the grid at their resolution plus one coordinate refinement pass.
inline OptimalAction optimal_safe_action(const ProblemInstance& inst) {
    return std::visit(
        [&](const auto& set) -> OptimalAction {
            using T = std::decay_t<decltype(set)>;
            if constexpr (std::is_same_v<T, FiniteArms>) {
                const auto [idx, val] = per_round_optimum(inst, set.vectors);
                return {set.vectors[idx], val, idx};
            } else if constexpr (std::is_same_v<T, BoxPolytope>) {
                return detail::box_optimum(inst, set, set.grid_resolution);
            } else {
                throw ConfigError("optimal_safe_action: contextual sets have per-round optima");
            }
        },
        inst.action_set());
}

/// Δ = c - μᵀBx*.
inline double safety_gap(const ProblemInstance& inst) {
    const auto opt = optimal_safe_action(inst);
    return std::max(0.0, inst.c() - inst.constraint_value(opt.x));
}

/// The K arms of round t for a contextual instance.
inline std::vector<Vec> generate_context(const ProblemInstance& inst, std::uint64_t t) {
    const auto* ctx = std::get_if<Contextual>(&inst.action_set());
    if (!ctx) throw ConfigError("generate_context: instance is not contextual");
    RandomStream rng(derive_key(ctx->seed, t));
    const std::size_t d = inst.dim();
    const double radius = inst.c() / inst.S();
    std::vector<Vec> arms;
    arms.reserve(ctx->K);
    for (std::size_t k = 0; k < ctx->n_warmup; ++k) arms.push_back(sample_warmup_in_ball(inst.B(), radius, rng));
    for (std::size_t k = ctx->n_warmup; k < ctx->K; ++k) {
        int tries = 0;
        for (;;) {
            Vec y = rng.in_unit_ball(d);
            if (norm2(inst.B() * y) > radius) {
                arms.push_back(y);
                break;
            }
            if (++tries > 100000)
                throw EnvironmentContractError("generate_context: cannot place non-warm-up arms outside D^w");
        }
    }
    // deterministic shuffle so warm-up arms are not always first
    for (std::size_t i = arms.size(); i > 1; --i) std::swap(arms[i - 1], arms[rng.index(i)]);
    return arms;
}

inline constexpr std::size_t kKarmedDim = 4;
inline constexpr std::size_t kKarmedArms = 15;
inline constexpr std::size_t kKarmedWarmupArms = 5;

/// Random K-armed instance: d=4, 15 fixed arms (5 in D^w, 10 in the unit ball),
/// unit-norm Gaussian μ, B ~ U[0,0.5]^{4x4}, c ~ U[0,1]. B, c and the arms are
/// redrawn until the safety gap is strictly positive.
inline ProblemInstance sample_karmed_instance(RandomStream& rng, double R = 0.1) {
    const std::size_t d = kKarmedDim;
    Vec mu = rng.normal_vec(d);
    mu *= 1.0 / norm2(mu);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Mat B(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) B(i, j) = rng.uniform(0.0, 0.5);
        const double c = rng.uniform();
        if (!(c > 0.0)) continue;
        FiniteArms arms;
        for (std::size_t k = 0; k < kKarmedWarmupArms; ++k) arms.vectors.push_back(sample_warmup_in_ball(B, c / 1.0, rng));
        for (std::size_t k = kKarmedWarmupArms; k < kKarmedArms; ++k) arms.vectors.push_back(rng.in_unit_ball(d));
        InstanceParams p{mu, B, c, R, 1.0, std::nullopt, arms, NoiseKind::Gaussian};
        ProblemInstance inst(p);
        if (safety_gap(inst) > 0.0) return inst;
    }
    throw EnvironmentContractError("sample_karmed_instance: no positive-gap instance found");
}

/// The two-dimensional box instance used for the polytope experiments.
inline ProblemInstance polytope_instance(std::size_t grid_resolution = kDefaultGridResolution, double R = 0.1) {
    InstanceParams p;
    p.mu = Vec{0.9, 0.044};
    p.B = Mat{{0.6, 1.8}, {1.8, 0.4}};
    p.c = 0.9;
    p.R = R;
    p.action_set = BoxPolytope{Vec{-1.0, -1.0}, Vec{1.0, 1.0}, grid_resolution};
    return ProblemInstance(p);
}

}  // namespace safeban
