#include "rdrrt/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdrrt/error.hpp"

namespace rdrrt {

json number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json to_json(const CellCounts& c) {
    json j;
    for (int z = 1; z >= 0; --z) {
        json arm;
        arm["n"] = c.n(z);
        for (int y = 0; y < 2; ++y) {
            for (int t = 0; t < 2; ++t) {
                arm["y" + std::to_string(y) + "_t" + std::to_string(t)] = c.count(z, y, t);
            }
        }
        if (c.n(z) > 0) {
            arm["mean_y"] = c.mean_y(z);
            arm["mean_t"] = c.mean_t(z);
            arm["mean_y_tbar"] = c.mean_y_tbar(z);
            arm["mean_y_t"] = c.mean_y_t(z);
        }
        j[z == 1 ? "above" : "below"] = arm;
    }
    return j;
}

json to_json(const RrtEstimate& e) {
    return {{"estimator", e.tag},
            {"constrained", e.constrained},
            {"bandwidth", e.bandwidth},
            {"mean", number(e.mean)},
            {"median", number(e.median)},
            {"l95", number(e.l95)},
            {"u95", number(e.u95)},
            {"share_nonpositive", e.share_nonpositive},
            {"rhat_rrt", number(e.rhat_rrt)},
            {"rhat_max", number(e.rhat_max)},
            {"ess_rrt", number(e.ess_rrt)},
            {"n1", e.n1},
            {"n0", e.n0},
            {"warnings", e.warnings}};
}

json to_json(const GmmFit& g) {
    return {{"rrt", number(g.rrt)},
            {"psi", number(g.psi)},
            {"alpha0", number(g.alpha0)},
            {"l95", number(g.l95)},
            {"u95", number(g.u95)},
            {"bootstrap_requested", g.bootstrap_requested},
            {"bootstrap_used", g.bootstrap_used},
            {"bootstrap_discarded", g.bootstrap_discarded},
            {"converged", g.converged},
            {"warnings", g.warnings}};
}

json to_json(const BoundsResult& b) {
    return {{"lower", number(b.lower)},
            {"upper", number(b.upper)},
            {"width", number(b.width)},
            {"observed_risk_difference", number(b.observed_risk_difference)},
            {"instrument_inequality_violated", b.instrument_inequality_violated}};
}

json to_json(const FTestResult& f) {
    return {{"F", number(f.f)}, {"df1", f.df1}, {"df2", f.df2}, {"p_value", number(f.p_value)}};
}

namespace {
json side_json(const SideCurves& s) {
    json j{{"available", s.available}};
    if (!s.warning.empty()) j["warning"] = s.warning;
    if (s.available) {
        j["stiffness_outcome"] = s.stiffness_outcome;
        j["stiffness_treatment"] = s.stiffness_treatment;
        j["grid"] = s.grid;
        j["outcome"] = s.outcome;
        j["treatment"] = s.treatment;
    }
    return j;
}
}  // namespace

json to_json(const BinnedSummary& s) {
    json bins = json::array();
    for (const auto& b : s.bins) {
        bins.push_back({{"bin_lo", b.lo},
                        {"bin_hi", b.hi},
                        {"bin_mid", b.mid},
                        {"mean_y", number(b.mean_y)},
                        {"mean_t", number(b.mean_t)},
                        {"n", b.n}});
    }
    return {{"threshold", s.threshold},
            {"edges", s.edges},
            {"bins", bins},
            {"splines", {{"below", side_json(s.below)}, {"above", side_json(s.above)}}}};
}

json to_json(const SamplerConfig& c) {
    return {{"chains", c.chains},
            {"burn_in", c.burn_in},
            {"iterations", c.iterations},
            {"retain", c.retain},
            {"seed", c.seed},
            {"initial_scale", c.initial_scale},
            {"target_acceptance", c.target_acceptance},
            {"keep_full_trace", c.keep_full_trace},
            {"block_updates", c.block_updates},
            {"block_proposals", c.block_proposals}};
}

#define RDRRT_DGP_FIELDS(X)                                                                    \
    X(x_mean) X(x_sd) X(x_lo) X(x_hi) X(a_z_weak) X(a_z_strong) X(a_u_low) X(a_u_high)         \
    X(a0_shift) X(b0) X(b_t_none) X(b_t_low) X(b_t_high) X(b_u_low) X(b_u_high) X(y_cap)      \
    X(max_clip_rate)

json to_json(const DgpCoefficients& c) {
    json j;
#define X(f) j[#f] = c.f;
    RDRRT_DGP_FIELDS(X)
#undef X
    return j;
}

DgpCoefficients dgp_from_json(const json& j, DgpCoefficients c) {
    static const std::vector<std::string> known{
#define X(f) #f,
        RDRRT_DGP_FIELDS(X)
#undef X
    };
    for (const auto& item : j.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            throw InputError("unknown DGP coefficient '" + item.key() + "'");
        }
    }
#define X(f) \
    if (j.contains(#f)) c.f = j.at(#f).get<double>();
    RDRRT_DGP_FIELDS(X)
#undef X
    return c;
}

json to_json(const SimCell& c, bool with_runs) {
    json j{{"scenario", c.scenario},
           {"bandwidth", c.bandwidth},
           {"estimator", c.estimator},
           {"true_rr", c.true_rr},
           {"replicates", c.replicates},
           {"failed", c.failed},
           {"share_failed", c.replicates ? static_cast<double>(c.failed) / c.replicates : 0.0},
           {"available", c.available}};
    if (c.available) {
        j["mean_estimate"] = number(c.mean_estimate);
        j["median_estimate"] = number(c.median_estimate);
        j["bias"] = number(c.bias);
        j["rmse"] = number(c.rmse);
        j["coverage"] = c.coverage;
        j["mean_width"] = number(c.mean_width);
        j["median_width"] = number(c.median_width);
        j["share_negative_lower"] = c.share_negative_lower;
        j["mean_l95"] = number(c.mean_l95);
        j["mean_u95"] = number(c.mean_u95);
        j["max_rhat"] = number(c.max_rhat);
    }
    if (with_runs) {
        json runs = json::array();
        for (const auto& r : c.runs) {
            json rj{{"ok", r.ok}};
            if (r.ok) {
                rj["estimate"] = number(r.estimate);
                rj["l95"] = number(r.l95);
                rj["u95"] = number(r.u95);
            } else {
                rj["error"] = r.error;
            }
            runs.push_back(rj);
        }
        j["runs"] = runs;
    }
    return j;
}

json to_json(const SimReport& r, bool with_runs) {
    json cells = json::array();
    for (const auto& c : r.cells) cells.push_back(to_json(c, with_runs));
    return cells;
}

namespace {
std::string csv_field(const json& v) {
    if (v.is_null()) return "";
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ';';
            s += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
        }
        return csv_field(json(s));
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }
    return v.dump();
}
}  // namespace

std::string to_csv(const json& rows, const std::vector<std::string>& columns) {
    std::ostringstream out;
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out << (i ? "," : "") << (row.contains(columns[i]) ? csv_field(row[columns[i]]) : "");
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace rdrrt
