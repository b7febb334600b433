#include "rdrrt/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "rdrrt/error.hpp"

namespace rdrrt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_lp(double v, double m, double var) { return -0.5 * (v - m) * (v - m) / var; }

// Poisson log-likelihood of a binary response under log(rate) = a + b x, up to a constant.
double poisson_lp(double a, double b, double sum_resp, double sum_resp_x, const ExpSum& es) {
    const double rate_sum = std::exp(a) * es(b);
    if (!std::isfinite(rate_sum)) return kNegInf;
    return a * sum_resp + b * sum_resp_x - rate_sum;
}

double binomial_logit_lp(double l, double successes, double trials) {
    return successes * l - trials * softplus(l);
}

double finite_or_neg_inf(double lp) { return std::isnan(lp) ? kNegInf : lp; }

std::vector<double> intercept_init(const ArmStats& a1, const ArmStats& a0, double ArmStats::*sum) {
    auto f = [&](const ArmStats& a) {
        const double n = static_cast<double>(a.n);
        return std::log(std::max(a.*sum / n, 1.0 / (2.0 * n)));
    };
    return {f(a1), f(a0)};
}

struct Arms {
    ArmStats above;
    ArmStats below;
};

std::shared_ptr<const Arms> make_arms(const WindowedSample& s) {
    if (s.n1 == 0 || s.n0 == 0) throw EmptyArmError();
    auto arms = std::make_shared<Arms>();
    arms->above = ArmStats::from(s, 1);
    arms->below = ArmStats::from(s, 0);
    return arms;
}

// Shared numerator: Poisson regressions of y on x* in each arm.
double numerator_lp(const Arms& a, double a1, double a0, double b1, double b0) {
    return poisson_lp(a1, b1, a.above.sum_y, a.above.sum_y_x, a.above.exp_all) +
           poisson_lp(a0, b0, a.below.sum_y, a.below.sum_y_x, a.below.exp_all);
}

std::vector<std::string> with_head(bool constrained, std::vector<std::string> rest) {
    rest.insert(rest.begin(), {constrained ? "rrt" : "alpha1", "alpha0", "beta1", "beta0"});
    return rest;
}

std::vector<std::string> derived_names(bool constrained) {
    if (constrained) return {"rrt", "pi", "psi", "alpha1"};
    return {"rrt", "pi", "psi"};
}

// Common wiring: `psi_of` maps parameters to the denominator difference,
// `rest_lp` adds the denominator likelihood and its priors (everything except
// the head block of alpha/rrt/beta).
template <class PsiFn, class RestFn>
TargetDensity assemble(std::shared_ptr<const Arms> arms, const PriorSpec& p, bool constrained,
                       std::vector<std::string> tail_names, std::vector<double> tail_init,
                       PsiFn psi_of, RestFn rest_lp) {
    p.validate();
    TargetDensity t;
    t.names = with_head(constrained, std::move(tail_names));
    const auto alpha = intercept_init(arms->above, arms->below, &ArmStats::sum_y);
    t.initial = {constrained ? 1.0 : alpha[0], alpha[1], 0.0, 0.0};
    t.initial.insert(t.initial.end(), tail_init.begin(), tail_init.end());
    t.derived_names = derived_names(constrained);

    t.log_density = [arms, p, constrained, psi_of, rest_lp](std::span<const double> v) {
        const double psi = psi_of(v);
        double a1 = v[0];
        double lp = 0.0;
        if (constrained) {
            if (!(v[0] > 0.0)) return kNegInf;
            a1 = constrained_alpha1(v[0], psi, v[1]);
            if (std::isnan(a1)) return kNegInf;
            lp += p.rrt.log_density(v[0]);
        } else {
            lp += normal_lp(v[0], p.coef_mean, p.coef_variance);
        }
        for (int j = 1; j < 4; ++j) lp += normal_lp(v[j], p.coef_mean, p.coef_variance);
        lp += numerator_lp(*arms, a1, v[1], v[2], v[3]);
        lp += rest_lp(*arms, v);
        return finite_or_neg_inf(lp);
    };
    t.derived = [constrained, psi_of](std::span<const double> v, std::span<double> out) {
        const double psi = psi_of(v);
        if (constrained) {
            const double a1 = constrained_alpha1(v[0], psi, v[1]);
            out[0] = v[0];
            out[1] = std::exp(a1) - std::exp(v[1]);
            out[2] = psi;
            out[3] = a1;
        } else {
            const double pi = std::exp(v[0]) - std::exp(v[1]);
            out[0] = 1.0 - pi / psi;
            out[1] = pi;
            out[2] = psi;
        }
    };
    return t;
}

}  // namespace

double RrtPrior::log_density(double rrt) const {
    if (!(rrt > 0.0)) return kNegInf;
    if (kind == Kind::gamma) return (a - 1.0) * std::log(rrt) - b * rrt;
    const double l = std::log(rrt);
    return -l - 0.5 * (l - a) * (l - a) / (b * b);
}

void PriorSpec::validate() const {
    if (!(coef_variance > 0.0) || !(logit_variance > 0.0)) {
        throw InputError("prior variances must be > 0");
    }
    if (!(rrt.b > 0.0) || (rrt.kind == RrtPrior::Kind::gamma && !(rrt.a > 0.0))) {
        throw InputError("RRT prior parameters must be > 0");
    }
}

const std::vector<std::string>& ModelSpec::tags() {
    static const std::vector<std::string> t{"pois.pois", "pois.flex", "pois.prod.flex"};
    return t;
}

std::string ModelSpec::tag() const {
    switch (denominator) {
        case Denominator::pois: return "pois.pois";
        case Denominator::flex: return "pois.flex";
        case Denominator::prod_flex: return "pois.prod.flex";
    }
    return {};
}

ModelSpec ModelSpec::parse(const std::string& tag, bool constrained) {
    ModelSpec m;
    m.constrained = constrained;
    if (tag == "pois.pois") {
        m.denominator = Denominator::pois;
    } else if (tag == "pois.flex") {
        m.denominator = Denominator::flex;
    } else if (tag == "pois.prod.flex") {
        m.denominator = Denominator::prod_flex;
    } else {
        throw InputError("unknown model tag '" + tag + "' (valid: pois.pois, pois.flex, pois.prod.flex)");
    }
    return m;
}

ArmStats ArmStats::from(const WindowedSample& s, int z) {
    ArmStats a;
    std::vector<double> all, treated, untreated;
    for (const auto& r : s.records) {
        if (r.z != z) continue;
        ++a.n;
        a.sum_y += r.y;
        a.sum_y_x += r.y * r.x_star;
        a.sum_y_tbar += r.y_tbar;
        a.sum_y_tbar_x += r.y_tbar * r.x_star;
        a.count_tbar += 1 - r.t;
        all.push_back(r.x_star);
        (r.t == 1 ? treated : untreated).push_back(r.x_star);
    }
    a.exp_all = ExpSum(all);
    a.exp_treated = ExpSum(treated);
    a.exp_untreated = ExpSum(untreated);
    return a;
}

double constrained_alpha1(double rrt, double psi, double alpha0) {
    // log{(1 - rrt) psi + exp(alpha0)} = alpha0 + log1p((1 - rrt) psi exp(-alpha0))
    const double ratio = (1.0 - rrt) * psi * std::exp(-alpha0);
    if (!(ratio > -1.0) || !std::isfinite(ratio)) return std::numeric_limits<double>::quiet_NaN();
    return alpha0 + std::log1p(ratio);
}

double constraint_roundtrip_error(const ChainSet& c) {
    const auto& d = c.derived_names;
    if (std::find(d.begin(), d.end(), "alpha1") == d.end()) return std::numeric_limits<double>::quiet_NaN();
    const auto rrt = c.pooled("rrt");
    const auto psi = c.pooled("psi");
    const auto a1 = c.pooled("alpha1");
    const auto a0 = c.pooled("alpha0");
    double worst = 0.0;
    for (std::size_t i = 0; i < rrt.size(); ++i) {
        // exp(a1) - exp(a0) without the cancellation of the direct difference
        const double back = 1.0 - std::exp(a0[i]) * std::expm1(a1[i] - a0[i]) / psi[i];
        worst = std::max(worst, std::abs(back - rrt[i]));
    }
    return worst;
}

std::size_t constraint_roundtrip_exceedances(const ChainSet& c, double tol) {
    const auto& d = c.derived_names;
    if (std::find(d.begin(), d.end(), "alpha1") == d.end()) return 0;
    const auto rrt = c.pooled("rrt");
    const auto psi = c.pooled("psi");
    const auto a1 = c.pooled("alpha1");
    const auto a0 = c.pooled("alpha0");
    std::size_t over = 0;
    for (std::size_t i = 0; i < rrt.size(); ++i)
        over += std::abs(1.0 - std::exp(a0[i]) * std::expm1(a1[i] - a0[i]) / psi[i] - rrt[i]) > tol;
    return over;
}

TargetDensity build_target_pois_pois(const WindowedSample& s, const PriorSpec& p, bool constrained) {
    auto arms = make_arms(s);
    const auto delta = intercept_init(arms->above, arms->below, &ArmStats::sum_y_tbar);
    auto psi = [](std::span<const double> v) { return std::exp(v[4]) - std::exp(v[5]); };
    auto rest = [p](const Arms& a, std::span<const double> v) {
        double lp = 0.0;
        for (int j = 4; j < 8; ++j) lp += normal_lp(v[j], p.coef_mean, p.coef_variance);
        lp += poisson_lp(v[4], v[6], a.above.sum_y_tbar, a.above.sum_y_tbar_x, a.above.exp_all);
        lp += poisson_lp(v[5], v[7], a.below.sum_y_tbar, a.below.sum_y_tbar_x, a.below.exp_all);
        return lp;
    };
    return assemble(arms, p, constrained, {"delta1", "delta0", "gamma1", "gamma0"},
                    {delta[0], delta[1], 0.0, 0.0}, psi, rest);
}

TargetDensity build_target_pois_flex(const WindowedSample& s, const PriorSpec& p, bool constrained) {
    auto arms = make_arms(s);
    auto psi = [](std::span<const double> v) { return expit(v[4]) - expit(v[5]); };
    auto rest = [p](const Arms& a, std::span<const double> v) {
        return normal_lp(v[4], p.logit_mean_above, p.logit_variance) +
               normal_lp(v[5], p.logit_mean_below, p.logit_variance) +
               binomial_logit_lp(v[4], a.above.sum_y_tbar, static_cast<double>(a.above.n)) +
               binomial_logit_lp(v[5], a.below.sum_y_tbar, static_cast<double>(a.below.n));
    };
    return assemble(arms, p, constrained, {"logit_q1", "logit_q0"},
                    {p.logit_mean_above, p.logit_mean_below}, psi, rest);
}

TargetDensity build_target_pois_prod_flex(const WindowedSample& s, const PriorSpec& p,
                                          bool constrained) {
    auto arms = make_arms(s);
    const auto delta = intercept_init(arms->above, arms->below, &ArmStats::sum_y);
    // E(Y(1-T) | Z=z) at the threshold = exp(delta_z + kappa_z) * r_z
    auto psi = [](std::span<const double> v) {
        return std::exp(v[4] + v[8]) * expit(v[10]) - std::exp(v[5] + v[9]) * expit(v[11]);
    };
    auto arm_lp = [](const ArmStats& a, double d, double g, double k) {
        const double rate_sum = std::exp(d) * (a.exp_treated(g) + std::exp(k) * a.exp_untreated(g));
        if (!std::isfinite(rate_sum)) return kNegInf;
        return d * a.sum_y + g * a.sum_y_x + k * a.sum_y_tbar - rate_sum;
    };
    auto rest = [p, arm_lp](const Arms& a, std::span<const double> v) {
        double lp = 0.0;
        for (int j = 4; j < 10; ++j) lp += normal_lp(v[j], p.coef_mean, p.coef_variance);
        lp += normal_lp(v[10], p.logit_mean_above, p.logit_variance);
        lp += normal_lp(v[11], p.logit_mean_below, p.logit_variance);
        lp += arm_lp(a.above, v[4], v[6], v[8]) + arm_lp(a.below, v[5], v[7], v[9]);
        lp += binomial_logit_lp(v[10], a.above.count_tbar, static_cast<double>(a.above.n));
        lp += binomial_logit_lp(v[11], a.below.count_tbar, static_cast<double>(a.below.n));
        return lp;
    };
    return assemble(arms, p, constrained,
                    {"delta1", "delta0", "gamma1", "gamma0", "kappa1", "kappa0", "logit_r1", "logit_r0"},
                    {delta[0], delta[1], 0.0, 0.0, 0.0, 0.0, p.logit_mean_above, p.logit_mean_below},
                    psi, rest);
}

TargetDensity build_target(const WindowedSample& s, const ModelSpec& m) {
    switch (m.denominator) {
        case Denominator::pois: return build_target_pois_pois(s, m.prior, m.constrained);
        case Denominator::flex: return build_target_pois_flex(s, m.prior, m.constrained);
        case Denominator::prod_flex: return build_target_pois_prod_flex(s, m.prior, m.constrained);
    }
    throw InputError("unknown denominator model");
}

RrtEstimate summarize(const ChainSet& c, const std::string& tag, double bandwidth) {
    if (std::find(c.derived_names.begin(), c.derived_names.end(), "rrt") == c.derived_names.end()) {
        throw InputError("chain set has no rrt draws");
    }
    std::vector<double> draws = c.pooled("rrt");
    if (draws.empty()) throw InputError("chain set has no rrt draws");
    for (double d : draws) {
        if (!std::isfinite(d)) throw NumericalError("non-finite RRT draw");
    }
    std::sort(draws.begin(), draws.end());
    RrtEstimate e;
    e.tag = tag;
    e.bandwidth = bandwidth;
    e.mean = mean(draws);
    e.median = quantile_sorted(draws, 0.5);
    e.l95 = quantile_sorted(draws, 0.025);
    e.u95 = quantile_sorted(draws, 0.975);
    const auto nonpos = std::count_if(draws.begin(), draws.end(), [](double d) { return d <= 0.0; });
    e.share_nonpositive = static_cast<double>(nonpos) / static_cast<double>(draws.size());
    e.warnings = c.warnings;
    for (const auto& conv : c.convergence) {
        if (!conv.rhat_available) continue;
        const bool is_param = std::find(c.names.begin(), c.names.end(), conv.name) != c.names.end();
        if (conv.name == "rrt") {
            e.rhat_rrt = conv.rhat;
            e.ess_rrt = conv.ess;
        }
        if (is_param || conv.name == "rrt") e.rhat_max = std::max(e.rhat_max, conv.rhat);
    }
    return e;
}

std::vector<std::string> data_warnings(const WindowedSample& s, const ModelSpec& m) {
    std::vector<std::string> w;
    const ArmStats a1 = ArmStats::from(s, 1), a0 = ArmStats::from(s, 0);
    if (a1.sum_y == 0.0 || a0.sum_y == 0.0) {
        w.emplace_back("no outcome events on one side of the threshold: RRT is prior-driven");
    }
    if (m.denominator == Denominator::prod_flex && (a1.count_tbar == 0.0 || a0.count_tbar == 0.0)) {
        w.emplace_back("no untreated records on one side of the threshold");
    }
    return w;
}

RrtEstimate estimate_rrt(const WindowedSample& s, const ModelSpec& m, const SamplerConfig& cfg,
                         ChainSet* chains_out) {
    const TargetDensity target = build_target(s, m);
    ChainSet chains = sample(target, cfg);
    RrtEstimate e = summarize(chains, m.tag(), s.bandwidth);
    e.constrained = m.constrained;
    e.n1 = s.n1;
    e.n0 = s.n0;
    auto dw = data_warnings(s, m);
    e.warnings.insert(e.warnings.begin(), dw.begin(), dw.end());
    if (chains_out) *chains_out = std::move(chains);
    return e;
}

}  // namespace rdrrt
