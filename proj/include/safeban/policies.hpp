#pragma once

// Safe-LUCB, GSLUCB and the no-exploration ablation, plus the warm-up samplers,
// phase-length formulas and the per-round simulation driver that attaches the
// regret-decomposition diagnostics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "safeban/confidence.hpp"
#include "safeban/environment.hpp"
#include "safeban/errors.hpp"
#include "safeban/linalg.hpp"
#include "safeban/random.hpp"
#include "safeban/safe_opt.hpp"

namespace safeban {

enum class SamplerKind { RejectionUniform, EllipsoidSurface };

struct WarmupSampler {
    SamplerKind kind = SamplerKind::RejectionUniform;
    std::size_t max_tries = 1'000'000;
    std::optional<double> epsilon;  // surface sampler level; defaults to the largest admissible
};

inline constexpr std::size_t kLambdaMinusSamples = 10000;
inline constexpr double kLambdaMinusDeflation = 0.9;

/// Largest ε ≤ c/S whose level set {‖Bx‖ = ε} stays inside the box.
inline double surface_epsilon(const PublicView& view) {
    const auto* box = std::get_if<BoxPolytope>(&view.action_set);
    if (!box) throw ConfigError("surface sampler requires a box action set");
    Mat b_inv;
    try {
        b_inv = inverse(view.B);
    } catch (const NumericDomainError&) {
        throw ConfigError("surface sampler requires an invertible B");
    }
    double eps = view.c / view.S;
    for (std::size_t j = 0; j < view.d; ++j) {
        const double reach = norm2(b_inv.row(j));  // max |e_jᵀB⁻¹z| over ‖z‖ = 1
        if (reach > 0.0) eps = std::min(eps, std::min(-box->lower[j], box->upper[j]) / reach);
    }
    return eps;
}

inline double sampler_epsilon(const WarmupSampler& s, const PublicView& view) {
    const double max_eps = surface_epsilon(view);
    if (!s.epsilon) return max_eps;
    if (!(*s.epsilon > 0.0) || *s.epsilon > max_eps * (1.0 + 1e-12))
        throw ConfigError("surface sampler epsilon must lie in (0, " + std::to_string(max_eps) + "]");
    return *s.epsilon;
}

inline std::vector<std::size_t> warmup_arms(const PublicView& view, const std::vector<Vec>& arms) {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < arms.size(); ++a)
        if (norm2(view.B * arms[a]) <= view.c / view.S) out.push_back(a);
    return out;
}

struct ExplorationSample {
    Vec x;
    std::optional<std::size_t> arm;
};

/// One pure-exploration action from D^w. Finite and contextual sets pick uniformly
/// among the warm-up-safe arms; boxes use rejection from the box or the surface map.
inline ExplorationSample sample_exploration_action(const WarmupSampler& sampler, const PublicView& view, RandomStream& rng,
                                                   const std::vector<Vec>* arms = nullptr) {
    if (arms) {
        const auto w = warmup_arms(view, *arms);
        if (w.empty()) throw EnvironmentContractError("no warm-up-safe arm available for exploration");
        const std::size_t a = w[rng.index(w.size())];
        return {(*arms)[a], a};
    }
    const auto* box = std::get_if<BoxPolytope>(&view.action_set);
    if (!box) throw ConfigError("sample_exploration_action: arm list required for finite action sets");
    if (sampler.kind == SamplerKind::EllipsoidSurface) {
        const double eps = sampler_epsilon(sampler, view);
        return {inverse(view.B) * rng.on_unit_sphere(view.d) * eps, std::nullopt};
    }
    for (std::size_t i = 0; i < sampler.max_tries; ++i) {
        Vec x(view.d);
        for (std::size_t j = 0; j < view.d; ++j) x[j] = rng.uniform(box->lower[j], box->upper[j]);
        if (norm2(view.B * x) <= view.c / view.S) return {x, std::nullopt};
    }
    throw ConfigError("rejection sampler exceeded its try budget; D^w has negligible volume");
}

/// λ_- = λ_min(E[xxᵀ]) of the exploration distribution.
/// Surface sampler: ε²/(d‖B‖²). Fixed finite arms: exact covariance of the uniform
/// choice over warm-up arms. Otherwise a 10⁴-sample Monte Carlo estimate deflated by 0.9.
inline double lambda_minus(const WarmupSampler& sampler, const PublicView& view, RandomStream& rng) {
    if (sampler.kind == SamplerKind::EllipsoidSurface) {
        const double eps = sampler_epsilon(sampler, view);
        const double bn = spectral_norm(view.B);
        return eps * eps / (static_cast<double>(view.d) * bn * bn);
    }
    Mat cov(view.d);
    double value = 0.0;
    if (const auto* fin = std::get_if<FiniteArms>(&view.action_set)) {
        const auto w = warmup_arms(view, fin->vectors);
        if (w.empty()) throw ConfigError("no warm-up-safe arm in the finite action set");
        for (std::size_t a : w) cov += outer(fin->vectors[a], fin->vectors[a]);
        cov *= 1.0 / static_cast<double>(w.size());
        value = min_eigenvalue(cov);
    } else {
        const auto* ctx = std::get_if<Contextual>(&view.action_set);
        for (std::size_t i = 0; i < kLambdaMinusSamples; ++i) {
            const Vec x = ctx ? sample_warmup_in_ball(view.B, view.c / view.S, rng)
                              : sample_exploration_action(sampler, view, rng).x;
            cov += outer(x, x);
        }
        cov *= 1.0 / static_cast<double>(kLambdaMinusSamples);
        value = kLambdaMinusDeflation * min_eigenvalue(cov);
    }
    if (!(value > 0.0)) throw ConfigError("exploration covariance is degenerate (lambda_minus <= 0)");
    return value;
}

struct PhaseParams {
    double lambda_minus = 1.0;
    std::uint64_t t_delta = 1;
    std::uint64_t horizon = 1;
    std::optional<double> known_gap;
};

inline std::uint64_t ceil_count(double x) {
    if (!(x > 1.0)) return 1;
    if (x > 1e18) return static_cast<std::uint64_t>(1e18);
    return static_cast<std::uint64_t>(std::ceil(x));
}

/// t_δ = (8L²/λ_-) log(d/δ), rounded up, at least 1.
inline std::uint64_t t_delta(double L, double lambda_minus, std::size_t d, double delta) {
    return ceil_count(8.0 * L * L / lambda_minus * std::log(static_cast<double>(d) / delta));
}

/// T_Δ = max(8L²‖B‖²β_T²/(λ_-Δ²) - 2λ/λ_-, t_δ), rounded up.
inline std::uint64_t t_big_delta(const PhaseParams& p, double gap, double beta_T, double B_norm, double L, double lambda) {
    if (!(gap > 0.0)) throw NumericDomainError("t_big_delta: safety gap must be positive (use t_zero)");
    const double first = 8.0 * L * L * B_norm * B_norm * beta_T * beta_T / (p.lambda_minus * gap * gap) -
                         2.0 * lambda / p.lambda_minus;
    return std::max(ceil_count(first), p.t_delta);
}

/// T₀ = max((‖B‖Lβ_T T/(c√(2λ_-)))^{2/3}, t_δ), rounded up.
inline std::uint64_t t_zero(const PhaseParams& p, double beta_T, double B_norm, double L, double c) {
    const double base = B_norm * L * beta_T * static_cast<double>(p.horizon) / (c * std::sqrt(2.0 * p.lambda_minus));
    return std::max(ceil_count(std::pow(base, 2.0 / 3.0)), p.t_delta);
}

enum class PolicyKind { SafeLucb, Gslucb, NoExploration, Oracle };
enum class ExplorationLength { Fixed, TDelta, TZero, TSmallDelta };
enum class Phase { PureExploration, ExploreExploit, Oracle };

inline const char* to_string(Phase p) noexcept {
    switch (p) {
        case Phase::PureExploration: return "explore";
        case Phase::ExploreExploit: return "exploit";
        default: return "oracle";
    }
}

struct PolicySpec {
    std::string name;
    PolicyKind kind = PolicyKind::SafeLucb;
    RegionKind region = RegionKind::ell1;
    WarmupSampler sampler;
    ExplorationLength length = ExplorationLength::Fixed;
    std::uint64_t T_prime = 0;   // for Fixed
    std::size_t gap_every = 1;   // GSLUCB: recompute Δ_t every k exploration rounds
    double delta = 0.01;
    double lambda = 1.0;
};

/// What the learner decided at a round, plus the region it used.
struct Decision {
    Vec action;
    std::optional<std::size_t> arm;
    Phase phase = Phase::PureExploration;
    std::optional<Vec> optimist;
    double optimistic_value = 0.0;
    std::size_t safe_count = 0;
    bool fallback = false;
};

/// Learner state. Sees only the public view of the instance and its own observations.
class Policy {
public:
    Policy(PolicySpec spec, PublicView view, std::uint64_t horizon, RandomStream setup_rng,
           std::optional<double> known_gap = std::nullopt)
        : spec_(std::move(spec)), view_(std::move(view)), gram_(view_.d, spec_.lambda) {
        if (spec_.kind == PolicyKind::Oracle) throw ConfigError("Policy: the oracle baseline is driven by the simulator");
        if (horizon < 1) throw ConfigError("Policy: horizon must be >= 1");
        sched_ = BetaSchedule{view_.R, view_.d, view_.L, spec_.lambda, view_.S, spec_.delta};
        try {
            sched_.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        const auto* box = std::get_if<BoxPolytope>(&view_.action_set);
        if (box) {
            if (spec_.region != RegionKind::ell1) throw ConfigError("box action sets require the ell1 region");
            polytope_ = std::make_shared<PolytopeOfuSolver>(view_.B, *box);
        }
        if (spec_.sampler.kind == SamplerKind::EllipsoidSurface && !box)
            throw ConfigError("surface sampler requires a box action set");
        if (spec_.kind == PolicyKind::Gslucb && !std::holds_alternative<FiniteArms>(view_.action_set))
            throw ConfigError("GSLUCB requires a fixed finite arm set");
        if (const auto* fin = std::get_if<FiniteArms>(&view_.action_set))
            if (warmup_arms(view_, fin->vectors).empty()) throw ConfigError("no warm-up-safe arm in the finite action set");

        phase_.horizon = horizon;
        phase_.known_gap = known_gap;
        beta_T_ = beta(sched_, horizon);
        B_norm_ = spectral_norm(view_.B);

        // λ_- is only needed by the adaptive lengths, but it is computed (and reported)
        // for every policy that explores.
        if (spec_.kind != PolicyKind::NoExploration) {
            phase_.lambda_minus = lambda_minus(spec_.sampler, view_, setup_rng);
            phase_.t_delta = t_delta(view_.L, phase_.lambda_minus, view_.d, spec_.delta);
            lambda_minus_ = phase_.lambda_minus;
            T0_ = t_zero(phase_, beta_T_, B_norm_, view_.L, view_.c);
        }

        switch (spec_.kind) {
            case PolicyKind::NoExploration: T_prime_ = 0; break;
            case PolicyKind::Gslucb: T_prime_ = T0_; break;
            default:
                switch (spec_.length) {
                    case ExplorationLength::Fixed: T_prime_ = spec_.T_prime; break;
                    case ExplorationLength::TZero: T_prime_ = T0_; break;
                    case ExplorationLength::TSmallDelta: T_prime_ = phase_.t_delta; break;
                    case ExplorationLength::TDelta:
                        if (!known_gap || !(*known_gap > 0.0))
                            throw ConfigError("T_delta exploration needs a known positive safety gap");
                        T_prime_ = t_big_delta(phase_, *known_gap, beta_T_, B_norm_, view_.L, spec_.lambda);
                        break;
                }
        }
        exploring_ = T_prime_ >= 1;
    }

    const PolicySpec& spec() const noexcept { return spec_; }
    const PublicView& view() const noexcept { return view_; }
    const GramState& gram() const noexcept { return gram_; }
    const BetaSchedule& schedule() const noexcept { return sched_; }
    const PhaseParams& phase_params() const noexcept { return phase_; }
    std::uint64_t round() const noexcept { return round_; }
    // Current exploration length T′ (GSLUCB: T′_{t-1}).
    std::uint64_t T_prime() const noexcept { return T_prime_; }
    std::uint64_t T_zero() const noexcept { return T0_; }
    std::optional<double> lambda_minus_used() const noexcept { return lambda_minus_; }
    double beta_T() const noexcept { return beta_T_; }
    bool exploring() const noexcept { return exploring_; }
    // Whether the next call to choose() is a pure-exploration round.
    bool explores_next() const noexcept {
        return exploring_ && round_ + 1 <= std::min(T_prime_, spec_.kind == PolicyKind::Gslucb ? T0_ : T_prime_);
    }
    std::optional<double> last_gap_lcb() const noexcept { return last_gap_; }
    // Round at which exploration ended (first exploit round), if it has.
    std::optional<std::uint64_t> exploit_start() const noexcept { return exploit_start_; }
    std::size_t fallback_count() const noexcept { return fallbacks_; }

    // Region used to certify safety at the current round (round() + 1).
    ConfidenceRegion region() const {
        return ConfidenceRegion(gram_.mu_hat(), gram_.gram(), gram_.gram_inv(), beta(sched_, round_ + 1), spec_.region);
    }

    Decision choose(RandomStream& rng, const std::vector<Vec>* context = nullptr) {
        const std::uint64_t t = round_ + 1;
        const std::vector<Vec>* arms = context;
        if (!arms)
            if (const auto* fin = std::get_if<FiniteArms>(&view_.action_set)) arms = &fin->vectors;

        if (!explores_next()) exploring_ = false;
        Decision d;
        if (exploring_) {
            auto s = sample_exploration_action(spec_.sampler, view_, rng, arms);
            d.action = s.x;
            d.arm = s.arm;
            d.phase = Phase::PureExploration;
            return d;
        }
        if (!exploit_start_) exploit_start_ = t;
        d.phase = Phase::ExploreExploit;
        const ConfidenceRegion reg = region();
        try {
            OfuResult r = polytope_ ? polytope_->solve(reg, view_.c) : ofu_finite(reg, view_.B, view_.c, *arms);
            d.action = r.action;
            if (!polytope_) d.arm = r.arm_index;
            d.optimist = r.optimist;
            d.optimistic_value = r.value;
            d.safe_count = r.safe_count;
        } catch (const NoSafeActionError&) {
            d.fallback = true;
            ++fallbacks_;
            if (polytope_) {
                d.action = Vec::zeros(view_.d);
            } else {
                std::optional<std::size_t> pick;
                for (std::size_t a = 0; a < arms->size() && !pick; ++a)
                    if (norm2((*arms)[a]) == 0.0) pick = a;
                if (!pick) {
                    const auto w = warmup_arms(view_, *arms);
                    if (w.empty()) throw EnvironmentContractError("no warm-up-safe arm for the fallback action");
                    pick = w.front();
                }
                d.action = (*arms)[*pick];
                d.arm = pick;
            }
        }
        return d;
    }

    void observe(const Vec& x, double loss) {
        gram_.update(x, loss);
        ++round_;
        if (spec_.kind == PolicyKind::Gslucb && exploring_) {
            if (round_ % spec_.gap_every == 0) gslucb_phase_update(compute_gap_lcb());
        }
    }

    // Δ_t from the current ℓ1 region over the fixed arms.
    double compute_gap_lcb() {
        const auto& arms = std::get<FiniteArms>(view_.action_set).vectors;
        ConfidenceRegion reg(gram_.mu_hat(), gram_.gram(), gram_.gram_inv(), beta(sched_, round_ + 1), RegionKind::ell1);
        last_gap_ = gap_lower_bound_karmed(reg, view_.B, view_.c, arms);
        return *last_gap_;
    }

    /// T′_t = T_{Δ_t} when Δ_t > 0, else T₀.
    std::uint64_t gslucb_phase_update(double gap_lcb) {
        T_prime_ = gap_lcb > 0.0 ? t_big_delta(phase_, gap_lcb, beta_T_, B_norm_, view_.L, spec_.lambda) : T0_;
        return T_prime_;
    }

private:
    PolicySpec spec_;
    PublicView view_;
    GramState gram_;
    BetaSchedule sched_;
    PhaseParams phase_;
    double beta_T_ = 0.0;
    double B_norm_ = 0.0;
    std::uint64_t T0_ = 0;
    std::uint64_t T_prime_ = 0;
    std::uint64_t round_ = 0;
    bool exploring_ = false;
    std::optional<std::uint64_t> exploit_start_;
    std::optional<double> last_gap_;
    std::optional<double> lambda_minus_;
    std::size_t fallbacks_ = 0;
    std::shared_ptr<const PolytopeOfuSolver> polytope_;
};

/// The regret-free baseline: x* (or the per-round optimum for contextual sets).
inline Vec oracle_policy_step(const ProblemInstance& inst, const std::vector<Vec>* context = nullptr) {
    if (context) return (*context)[per_round_optimum(inst, *context).first];
    return optimal_safe_action(inst).x;
}

/// One logged round.
struct RoundRecord {
    std::uint64_t round = 0;
    Vec action;
    double loss = 0.0;
    double regret = 0.0;
    double term1 = 0.0;
    double term2 = 0.0;
    double alpha = 1.0;
    bool safe = true;
    Phase phase = Phase::PureExploration;
    // diagnostics not written to the per-run CSV
    double beta = 0.0;
    double term1_bound = 0.0;   // 2ρ‖x_t‖_{A_t⁻¹} with ρ the effective radius
    bool covered_l2 = true;     // μ ∈ C_t (ℓ2 ellipsoid)
    bool covered_region = true; // μ in the policy's own region
    bool xstar_declared_safe = false;
    bool fallback = false;
    std::optional<double> gap_lcb;  // GSLUCB Δ_t computed after this round
    double lambda_min_gram = 0.0;   // λ_min(A_t) at the start of the round, when requested
};

struct SimulationOptions {
    bool track_lambda_min = false;
};

/// Couples an instance with a learner (or the oracle) and produces RoundRecords.
/// Random streams: noise, exploration and setup are independent sub-streams of `key`.
class Simulation {
public:
    Simulation(std::shared_ptr<const ProblemInstance> inst, const PolicySpec& spec, std::uint64_t horizon, std::uint64_t key,
               SimulationOptions opts = {})
        : inst_(std::move(inst)), horizon_(horizon), noise_rng_(derive_key(key, 1)), explore_rng_(derive_key(key, 2)), opts_(opts) {
        contextual_ = std::holds_alternative<Contextual>(inst_->action_set());
        if (!contextual_) xstar_ = optimal_safe_action(*inst_);
        if (spec.kind == PolicyKind::Oracle) {
            oracle_ = true;
        } else {
            std::optional<double> gap;
            if (spec.kind == PolicyKind::SafeLucb && spec.length == ExplorationLength::TDelta) {
                if (contextual_) throw ConfigError("T_delta exploration is not available for contextual instances");
                gap = safety_gap(*inst_);
            }
            policy_.emplace(spec, inst_->public_view(), horizon, RandomStream(derive_key(key, 3)), gap);
        }
    }

    const ProblemInstance& instance() const noexcept { return *inst_; }
    const std::optional<Policy>& policy() const noexcept { return policy_; }
    std::uint64_t round() const noexcept { return t_; }
    bool done() const noexcept { return t_ >= horizon_; }
    const std::optional<OptimalAction>& x_star() const noexcept { return xstar_; }

    RoundRecord step() {
        const std::uint64_t t = ++t_;
        std::vector<Vec> context;
        if (contextual_) context = generate_context(*inst_, t);
        const std::vector<Vec>* ctx = contextual_ ? &context : nullptr;

        Vec x_star;
        double best_value = 0.0;
        if (contextual_) {
            const auto [idx, val] = per_round_optimum(*inst_, context);
            x_star = context[idx];
            best_value = val;
        } else {
            x_star = xstar_->x;
            best_value = xstar_->value;
        }

        RoundRecord rec;
        rec.round = t;
        const Mat& B = inst_->B();
        if (oracle_) {
            rec.action = x_star;
            rec.phase = Phase::Oracle;
            rec.xstar_declared_safe = true;
        } else {
            Policy& pol = *policy_;
            const ConfidenceRegion reg = pol.region();
            const ConfidenceRegion reg2(reg.center, reg.gram, reg.gram_inv, reg.radius, RegionKind::ell2);
            rec.beta = reg.radius;
            rec.covered_l2 = contains(reg2, inst_->mu(), 1e-9);
            rec.covered_region = reg.kind == RegionKind::ell2 ? rec.covered_l2 : contains(reg, inst_->mu(), 1e-9);
            rec.xstar_declared_safe = declared_safe(reg, B, inst_->c(), x_star);
            rec.alpha = alpha_t(inst_->mu(), B, inst_->c(), x_star, reg.gram, reg.effective_radius());
            if (opts_.track_lambda_min) rec.lambda_min_gram = min_eigenvalue(reg.gram);

            const Decision dec = pol.choose(explore_rng_, ctx);
            rec.action = dec.action;
            rec.phase = dec.phase;
            rec.fallback = dec.fallback;
            rec.term1_bound = 2.0 * reg.effective_radius() * weighted_norm(dec.action, reg.gram_inv);
            if (dec.optimist) {
                const double opt_val = dot(*dec.optimist, dec.action);
                rec.term1 = inst_->expected_loss(dec.action) - opt_val;
                rec.term2 = opt_val - best_value;
            }
        }

        rec.regret = inst_->expected_loss(rec.action) - best_value;
        // Outside OFU rounds there is no optimistic pair; all regret is booked as Term II.
        if (oracle_ || rec.phase != Phase::ExploreExploit || rec.fallback) {
            rec.term1 = 0.0;
            rec.term2 = rec.regret;
        }
        rec.safe = is_safe(*inst_, rec.action);
        rec.loss = sample_loss(*inst_, rec.action, noise_rng_);
        if (policy_) {
            policy_->observe(rec.action, rec.loss);
            if (policy_->spec().kind == PolicyKind::Gslucb && rec.phase == Phase::PureExploration)
                rec.gap_lcb = policy_->last_gap_lcb();
        }
        return rec;
    }

private:
    std::shared_ptr<const ProblemInstance> inst_;
    std::uint64_t horizon_;
    RandomStream noise_rng_;
    RandomStream explore_rng_;
    SimulationOptions opts_;
    bool contextual_ = false;
    bool oracle_ = false;
    std::optional<OptimalAction> xstar_;
    std::optional<Policy> policy_;
    std::uint64_t t_ = 0;
};

}  // namespace safeban
