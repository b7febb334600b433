#include "rdrrt/mcmc.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "rdrrt/error.hpp"

namespace rdrrt {

namespace {

constexpr int kBatch = 50;
constexpr double kBlockTarget = 0.234;
constexpr int kInitRetries = 100;
constexpr int kCovarianceRefresh = 250;

std::mt19937_64 chain_rng(std::uint64_t seed, std::size_t chain) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chain), 0x6d636d63u};
    return std::mt19937_64(seq);
}

double checked(double lp) {
    if (std::isnan(lp)) throw NumericalError("target log-density returned NaN");
    return lp;
}

// Running mean/covariance (Welford).
class RunningCovariance {
public:
    explicit RunningCovariance(std::size_t d) : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::MatrixXd::Zero(d, d)) {}

    void add(const std::vector<double>& x) {
        ++n_;
        const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
        const Eigen::VectorXd delta = v - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (v - mean_).transpose();
    }
    std::size_t count() const { return n_; }
    Eigen::MatrixXd covariance() const { return m2_ / static_cast<double>(n_ - 1); }

private:
    std::size_t n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd m2_;
};

Chain run_chain(const TargetDensity& target, const SamplerConfig& cfg, std::size_t index) {
    const std::size_t d = target.dimension();
    auto rng = chain_rng(cfg.seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> x = target.initial;
    double lp = checked(target.log_density(x));
    for (int attempt = 0; !std::isfinite(lp) && attempt < kInitRetries; ++attempt) {
        for (std::size_t j = 0; j < d; ++j) x[j] = target.initial[j] + 0.1 * normal(rng);
        lp = checked(target.log_density(x));
    }
    if (!std::isfinite(lp)) throw NumericalError("no initial point with finite log-density");

    std::vector<double> log_scale(d, std::log(cfg.initial_scale));
    double log_block = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    std::vector<int> batch_acc(d, 0);
    int batch_block_acc = 0, batch_block_tries = 0;
    std::vector<long> post_acc(d, 0);
    long post_block_acc = 0, post_block_tries = 0;
    long burn_accepts = 0;
    int batches = 0;

    RunningCovariance cov(d);
    Eigen::MatrixXd chol;
    bool have_block = false;
    const int cov_start = cfg.burn_in / 4;
    const int block_start = cfg.burn_in / 2;
    const int block_count = cfg.block_proposals > 0 ? cfg.block_proposals : static_cast<int>(d);

    const long total = static_cast<long>(cfg.burn_in) + cfg.iterations;
    const long keep_from = cfg.keep_full_trace ? cfg.burn_in : total - cfg.retain;
    Chain out;
    out.draws.reserve(static_cast<std::size_t>(total - keep_from) * d);

    std::vector<double> prop(d);
    Eigen::VectorXd noise(d);
    for (long it = 0; it < total; ++it) {
        const bool adapting = it < cfg.burn_in;

        for (std::size_t j = 0; j < d; ++j) {
            const double old = x[j];
            x[j] = old + std::exp(log_scale[j]) * normal(rng);
            const double lp_new = checked(target.log_density(x));
            if (std::log(unif(rng)) < lp_new - lp) {
                lp = lp_new;
                if (adapting) {
                    ++batch_acc[j];
                    ++burn_accepts;
                } else {
                    ++post_acc[j];
                }
            } else {
                x[j] = old;
            }
        }

        for (int k = 0; cfg.block_updates && have_block && k < block_count; ++k) {
            for (std::size_t j = 0; j < d; ++j) noise(static_cast<Eigen::Index>(j)) = normal(rng);
            const Eigen::VectorXd step = std::exp(log_block) * (chol * noise);
            for (std::size_t j = 0; j < d; ++j) prop[j] = x[j] + step(static_cast<Eigen::Index>(j));
            const double lp_new = checked(target.log_density(prop));
            const bool ok = std::log(unif(rng)) < lp_new - lp;
            if (ok) {
                x = prop;
                lp = lp_new;
            }
            if (adapting) {
                ++batch_block_tries;
                batch_block_acc += ok;
                burn_accepts += ok;
            } else {
                ++post_block_tries;
                post_block_acc += ok;
            }
        }

        if (adapting) {
            if (it >= cov_start) cov.add(x);
            if ((it + 1) % kBatch == 0) {
                ++batches;
                const double delta = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batches)));
                for (std::size_t j = 0; j < d; ++j) {
                    const double rate = static_cast<double>(batch_acc[j]) / kBatch;
                    log_scale[j] += rate > cfg.target_acceptance ? delta : -delta;
                    batch_acc[j] = 0;
                }
                if (batch_block_tries > 0) {
                    const double rate = static_cast<double>(batch_block_acc) / batch_block_tries;
                    log_block += rate > kBlockTarget ? delta : -delta;
                    batch_block_acc = batch_block_tries = 0;
                }
            }
            if (cfg.block_updates && it + 1 >= block_start &&
                (it + 1 - block_start) % kCovarianceRefresh == 0 && cov.count() > 2 * d + 10) {
                Eigen::MatrixXd sigma = cov.covariance();
                for (std::size_t j = 0; j < d; ++j) {
                    const auto k = static_cast<Eigen::Index>(j);
                    sigma(k, k) += 1e-10 + 1e-8 * sigma(k, k);
                }
                const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
                if (llt.info() == Eigen::Success) {
                    chol = llt.matrixL();
                    have_block = true;
                }
            }
            if (it + 1 == cfg.burn_in) {
                if (burn_accepts == 0) throw NumericalError("sampler stuck");
                for (double s : log_scale) out.scales_end_of_burn_in.push_back(std::exp(s));
                out.scales_end_of_burn_in.push_back(std::exp(log_block));
            }
        }

        if (it >= keep_from) out.draws.insert(out.draws.end(), x.begin(), x.end());
    }

    for (double s : log_scale) out.scales_final.push_back(std::exp(s));
    out.scales_final.push_back(std::exp(log_block));
    if (cfg.burn_in == 0) out.scales_end_of_burn_in = out.scales_final;
    for (std::size_t j = 0; j < d; ++j) {
        out.acceptance.push_back(cfg.iterations > 0 ? static_cast<double>(post_acc[j]) / cfg.iterations : 0.0);
    }
    out.block_acceptance = post_block_tries > 0 ? static_cast<double>(post_block_acc) / post_block_tries : 0.0;

    if (target.derived) {
        const std::size_t nd = target.derived_names.size();
        const std::size_t rows = out.draws.size() / d;
        out.derived.resize(rows * nd);
        for (std::size_t i = 0; i < rows; ++i) {
            target.derived(std::span<const double>(out.draws.data() + i * d, d),
                           std::span<double>(out.derived.data() + i * nd, nd));
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double a : v) s += (a - m) * (a - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

std::vector<std::vector<double>> ChainSet::per_chain(const std::string& name) const {
    std::vector<std::vector<double>> out(chains.size());
    const auto p = std::find(names.begin(), names.end(), name);
    if (p != names.end()) {
        const auto j = static_cast<std::size_t>(p - names.begin());
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const std::size_t rows = chains[c].draws.size() / names.size();
            for (std::size_t i = 0; i < rows; ++i) out[c].push_back(draw(c, i, j));
        }
        return out;
    }
    const auto q = std::find(derived_names.begin(), derived_names.end(), name);
    if (q == derived_names.end()) throw InputError("unknown quantity '" + name + "'");
    const auto j = static_cast<std::size_t>(q - derived_names.begin());
    const std::size_t nd = derived_names.size();
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const std::size_t rows = chains[c].derived.size() / nd;
        for (std::size_t i = 0; i < rows; ++i) out[c].push_back(chains[c].derived[i * nd + j]);
    }
    return out;
}

std::vector<double> ChainSet::pooled(const std::string& name) const {
    std::vector<double> out;
    for (auto& v : per_chain(name)) out.insert(out.end(), v.begin(), v.end());
    return out;
}

const Convergence& ChainSet::convergence_of(const std::string& name) const {
    for (const auto& c : convergence) {
        if (c.name == name) return c;
    }
    throw InputError("no convergence record for '" + name + "'");
}

ChainSet sample(const TargetDensity& target, const SamplerConfig& cfg) {
    const std::size_t d = target.dimension();
    if (d == 0) throw InputError("target dimension must be >= 1");
    if (target.initial.size() != d) throw InputError("initial point has wrong dimension");
    if (cfg.chains < 1) throw InputError("chains must be >= 1");
    if (cfg.burn_in < 0 || cfg.iterations < 1) throw InputError("iterations must be >= 1");
    if (cfg.retain < 1 || cfg.retain > cfg.iterations) {
        throw InputError("retained draws must be in [1, iterations]");
    }

    ChainSet out;
    out.names = target.names;
    out.derived_names = target.derived ? target.derived_names : std::vector<std::string>{};
    out.chains.resize(static_cast<std::size_t>(cfg.chains));
    out.retained = cfg.keep_full_trace ? static_cast<std::size_t>(cfg.iterations)
                                       : static_cast<std::size_t>(cfg.retain);

    if (cfg.parallel_chains && cfg.chains > 1) {
        std::vector<std::exception_ptr> errors(out.chains.size());
        {
            std::vector<std::jthread> workers;
            for (std::size_t k = 0; k < out.chains.size(); ++k) {
                workers.emplace_back([&, k] {
                    try {
                        out.chains[k] = run_chain(target, cfg, k);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::size_t k = 0; k < out.chains.size(); ++k) out.chains[k] = run_chain(target, cfg, k);
    }

    if (out.retained >= 4) {
        out.convergence = diagnostics(out);
        for (const auto& c : out.convergence) {
            if (c.rhat_available && c.rhat > kRhatWarning) {
                out.warnings.push_back("R-hat " + std::to_string(c.rhat) + " for " + c.name);
            }
        }
    }
    return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (chains.size() < 2) throw InputError("split R-hat needs at least 2 chains");
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        if (c.size() < 4) throw InputError("split R-hat needs at least 4 draws per chain");
        const std::size_t half = c.size() / 2;
        halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    const double len = static_cast<double>(halves.front().size());
    std::vector<double> means, vars;
    for (const auto& h : halves) {
        means.push_back(mean_of(h));
        vars.push_back(var_of(h, means.back()));
    }
    const double w = mean_of(vars);
    const double b_over_n = var_of(means, mean_of(means));
    if (w <= 0.0) {
        if (b_over_n <= 0.0) {
            if (degenerate) *degenerate = true;
            return 1.0;
        }
        return std::numeric_limits<double>::infinity();
    }
    const double var_plus = (len - 1.0) / len * w + b_over_n;
    return std::max(1.0, std::sqrt(var_plus / w));
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    if (chains.empty()) return 0.0;
    const std::size_t n = std::min_element(chains.begin(), chains.end(), [](auto& a, auto& b) {
                              return a.size() < b.size();
                          })->size();
    const std::size_t m = chains.size();
    if (n < 4) throw InputError("ESS needs at least 4 draws per chain");

    std::vector<double> means, vars;
    for (const auto& c : chains) {
        std::vector<double> v(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n));
        means.push_back(mean_of(v));
        vars.push_back(var_of(v, means.back()));
    }
    const double w = mean_of(vars);
    const double var_plus = m > 1 ? (n - 1.0) / n * w + var_of(means, mean_of(means)) : w * (n - 1.0) / n;
    if (!(var_plus > 0.0)) return static_cast<double>(m * n);

    auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) {
                s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
            }
            acc += s / static_cast<double>(n);
        }
        return acc / static_cast<double>(m);
    };
    auto rho = [&](std::size_t lag) { return 1.0 - (w - autocov(lag)) / var_plus; };

    // Geyer: sum consecutive pairs while positive, forcing them monotone.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = rho(2 * k) + rho(2 * k + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
    return static_cast<double>(m * n) / tau;
}

std::vector<Convergence> diagnostics(const ChainSet& c) {
    if (c.retained < 4) throw InputError("diagnostics need at least 4 retained draws");
    std::vector<Convergence> out;
    std::vector<std::string> all = c.names;
    all.insert(all.end(), c.derived_names.begin(), c.derived_names.end());
    for (const auto& name : all) {
        const auto chains = c.per_chain(name);
        Convergence conv;
        conv.name = name;
        bool finite = true;
        for (const auto& ch : chains) {
            for (double v : ch) finite = finite && std::isfinite(v);
        }
        if (chains.size() >= 2 && finite) {
            conv.rhat = split_rhat(chains, &conv.degenerate);
            conv.rhat_available = true;
        }
        conv.ess = finite && !conv.degenerate ? effective_sample_size(chains) : 0.0;
        out.push_back(conv);
    }
    return out;
}

}  // namespace rdrrt
