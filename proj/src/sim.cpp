#include "rdrrt/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "rdrrt/error.hpp"
#include "rdrrt/freq.hpp"
#include "rdrrt/stats.hpp"

namespace rdrrt {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    // splitmix64 finaliser over the running hash
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

std::vector<std::string> split(const std::string& s, char d) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream ss(s);
    while (std::getline(ss, part, d)) out.push_back(part);
    return out;
}

}  // namespace

std::string ScenarioSpec::name() const {
    std::string s = strength == Strength::strong ? "strong" : "weak";
    s += confounding == Confounding::high ? "/high" : "/low";
    switch (effect) {
        case Effect::none: s += "/none"; break;
        case Effect::low: s += "/low"; break;
        case Effect::high: s += "/high"; break;
    }
    return s;
}

int ScenarioSpec::index() const {
    return (strength == Strength::strong ? 6 : 0) + (confounding == Confounding::high ? 3 : 0) +
           static_cast<int>(effect);
}

double ScenarioSpec::b_t() const {
    switch (effect) {
        case Effect::none: return dgp.b_t_none;
        case Effect::low: return dgp.b_t_low;
        case Effect::high: return dgp.b_t_high;
    }
    return 0.0;
}

double ScenarioSpec::true_rr() const { return std::exp(b_t()); }

ScenarioSpec ScenarioSpec::parse(const std::string& name) {
    const auto parts = split(name, '/');
    const std::string help = " (expected strength/confounding/effect, e.g. strong/low/high)";
    if (parts.size() != 3) throw InputError("bad scenario '" + name + "'" + help);
    ScenarioSpec s;
    if (parts[0] == "weak") s.strength = Strength::weak;
    else if (parts[0] == "strong") s.strength = Strength::strong;
    else throw InputError("bad instrument strength '" + parts[0] + "'" + help);
    if (parts[1] == "low") s.confounding = Confounding::low;
    else if (parts[1] == "high") s.confounding = Confounding::high;
    else throw InputError("bad confounding level '" + parts[1] + "'" + help);
    if (parts[2] == "none") s.effect = Effect::none;
    else if (parts[2] == "low") s.effect = Effect::low;
    else if (parts[2] == "high") s.effect = Effect::high;
    else throw InputError("bad effect size '" + parts[2] + "'" + help);
    return s;
}

std::vector<ScenarioSpec> ScenarioSpec::all(const ScenarioSpec& base) {
    std::vector<ScenarioSpec> out;
    for (auto st : {Strength::weak, Strength::strong}) {
        for (auto co : {Confounding::low, Confounding::high}) {
            for (auto ef : {Effect::none, Effect::low, Effect::high}) {
                ScenarioSpec s = base;
                s.strength = st;
                s.confounding = co;
                s.effect = ef;
                out.push_back(s);
            }
        }
    }
    return out;
}

std::vector<Observation> generate(const ScenarioSpec& spec, int replicate, std::size_t* clipped) {
    if (spec.n < 1) throw InputError("sample size must be >= 1");
    const auto& c = spec.dgp;
    const double a_z = spec.strength == Strength::strong ? c.a_z_strong : c.a_z_weak;
    const double a_u = spec.confounding == Confounding::high ? c.a_u_high : c.a_u_low;
    const double b_u = spec.confounding == Confounding::high ? c.b_u_high : c.b_u_low;
    const double a0 = -a_z / 2.0 + c.a0_shift;
    const double b_t = spec.b_t();

    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(spec.index()), static_cast<std::uint32_t>(replicate),
                      0x73696dU};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(spec.n));
    std::size_t clip = 0;
    for (int i = 0; i < spec.n; ++i) {
        double x = 0.0;
        do {
            x = c.x_mean + c.x_sd * normal(rng);
        } while (!(x > c.x_lo && x < c.x_hi));
        const double u = normal(rng);
        const int z = x >= spec.threshold ? 1 : 0;
        const int t = unif(rng) < expit(a0 + a_z * z + a_u * u) ? 1 : 0;
        double py = std::exp(c.b0 + b_t * t + b_u * u);
        if (py > c.y_cap) {
            py = c.y_cap;
            ++clip;
        }
        const int y = unif(rng) < py ? 1 : 0;
        out.push_back({x, t, y});
    }
    if (clipped) *clipped = clip;
    if (static_cast<double>(clip) >= c.max_clip_rate * spec.n) {
        throw NumericalError("DGP probability overflow: " + std::to_string(clip) + " of " +
                             std::to_string(spec.n) + " outcome probabilities clipped");
    }
    return out;
}

std::string EstimatorSpec::label() const { return constrained ? tag + ":constrained" : tag; }

EstimatorSpec EstimatorSpec::parse(const std::string& label) {
    EstimatorSpec e;
    const auto colon = label.find(':');
    e.tag = label.substr(0, colon);
    if (colon != std::string::npos) {
        if (label.substr(colon + 1) != "constrained") throw InputError("bad estimator label '" + label + "'");
        e.constrained = true;
    }
    if (e.tag == "gmm") {
        if (e.constrained) throw InputError("gmm has no constrained variant");
        return e;
    }
    const auto& tags = ModelSpec::tags();
    if (std::find(tags.begin(), tags.end(), e.tag) == tags.end()) {
        throw InputError("unknown estimator '" + e.tag +
                         "' (valid: pois.pois, pois.flex, pois.prod.flex, gmm)");
    }
    return e;
}

SimCell aggregate(std::string scenario, double bandwidth, std::string estimator, double true_rr,
                  std::vector<ReplicateResult> runs) {
    SimCell c;
    c.scenario = std::move(scenario);
    c.bandwidth = bandwidth;
    c.estimator = std::move(estimator);
    c.true_rr = true_rr;
    c.replicates = static_cast<int>(runs.size());
    std::vector<double> est, widths;
    double sq = 0.0, lsum = 0.0, usum = 0.0;
    int covered = 0, negative = 0;
    for (const auto& r : runs) {
        if (!r.ok) {
            ++c.failed;
            continue;
        }
        est.push_back(r.estimate);
        widths.push_back(r.u95 - r.l95);
        sq += (r.estimate - true_rr) * (r.estimate - true_rr);
        lsum += r.l95;
        usum += r.u95;
        covered += (r.l95 <= true_rr && true_rr <= r.u95);
        negative += r.l95 < 0.0;
        c.max_rhat = std::max(c.max_rhat, r.rhat_max);
    }
    c.runs = std::move(runs);
    if (est.empty()) return c;
    const double k = static_cast<double>(est.size());
    c.available = true;
    c.mean_estimate = mean(est);
    c.median_estimate = quantile(est, 0.5);
    c.bias = c.mean_estimate - true_rr;
    c.rmse = std::sqrt(sq / k);
    c.coverage = covered / k;
    c.mean_width = mean(widths);
    c.median_width = quantile(widths, 0.5);
    c.share_negative_lower = negative / k;
    c.mean_l95 = lsum / k;
    c.mean_u95 = usum / k;
    return c;
}

SimReport run_grid(const ScenarioSpec& spec, const std::vector<EstimatorSpec>& estimators,
                   const GridOptions& opts) {
    if (spec.replications < 1) throw InputError("replications must be >= 1");
    if (estimators.empty()) throw InputError("no estimators given");
    if (spec.bandwidths.empty()) throw InputError("no bandwidths given");
    for (double h : spec.bandwidths) Window(spec.threshold, h);

    const std::size_t nb = spec.bandwidths.size(), ne = estimators.size();
    const auto reps = static_cast<std::size_t>(spec.replications);
    // results[(b * ne + e) * reps + r]
    std::vector<ReplicateResult> results(nb * ne * reps);
    std::vector<std::exception_ptr> fatal(reps);

    auto run_one = [&](std::size_t r) {
        std::vector<Observation> data;
        try {
            data = generate(spec, static_cast<int>(r));
        } catch (...) {
            fatal[r] = std::current_exception();
            return;
        }
        for (std::size_t b = 0; b < nb; ++b) {
            std::optional<WindowedSample> s;
            std::string window_error;
            try {
                s = window(data, Window(spec.threshold, spec.bandwidths[b]));
            } catch (const std::exception& e) {
                window_error = e.what();
            }
            for (std::size_t e = 0; e < ne; ++e) {
                ReplicateResult& out = results[(b * ne + e) * reps + r];
                if (!s) {
                    out.error = window_error;
                    continue;
                }
                const std::uint64_t seed =
                    mix(mix(mix(mix(spec.seed, static_cast<std::uint64_t>(spec.index())), r), b), e);
                try {
                    if (estimators[e].is_gmm()) {
                        const GmmFit g = gmm_msmm(*s, opts.bootstrap, seed);
                        out.estimate = g.rrt;
                        out.l95 = g.l95;
                        out.u95 = g.u95;
                        out.ok = std::isfinite(g.l95) && std::isfinite(g.u95);
                        if (!out.ok) out.error = "no identified bootstrap replicate";
                    } else {
                        const ModelSpec m = ModelSpec::parse(estimators[e].tag, estimators[e].constrained);
                        SamplerConfig cfg = opts.sampler;
                        cfg.seed = seed;
                        cfg.parallel_chains = false;
                        ChainSet chains;
                        const RrtEstimate est = estimate_rrt(*s, m, cfg, &chains);
                        out.estimate = est.mean;
                        out.share_nonpositive = est.share_nonpositive;
                        out.roundtrip_error = constraint_roundtrip_error(chains);
                        out.roundtrip_over = constraint_roundtrip_exceedances(chains, 1e-12);
                        out.draws = chains.pooled("rrt").size();
                        out.l95 = est.l95;
                        out.u95 = est.u95;
                        out.rhat_max = est.rhat_max;
                        out.ok = true;
                    }
                } catch (const std::exception& ex) {
                    out.ok = false;
                    out.error = ex.what();
                }
            }
        }
    };

    unsigned threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(reps));
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < reps; r = next++) run_one(r);
            });
        }
    }
    for (auto& f : fatal) {
        if (f) std::rethrow_exception(f);
    }

    SimReport report;
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t e = 0; e < ne; ++e) {
            const auto first = results.begin() + static_cast<std::ptrdiff_t>((b * ne + e) * reps);
            report.cells.push_back(aggregate(spec.name(), spec.bandwidths[b], estimators[e].label(),
                                             spec.true_rr(), {first, first + static_cast<std::ptrdiff_t>(reps)}));
        }
    }
    return report;
}

}  // namespace rdrrt
