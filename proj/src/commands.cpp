#include "rdrrt/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "rdrrt/error.hpp"
#include "rdrrt/explore.hpp"
#include "rdrrt/freq.hpp"
#include "rdrrt/models.hpp"
#include "rdrrt/sim.hpp"

namespace rdrrt {

namespace {

std::uint64_t cell_seed(std::uint64_t seed, std::size_t bandwidth, std::size_t estimator) {
    std::uint64_t h = seed * 0x9e3779b97f4a7c15ULL + bandwidth * 0x100000001b3ULL + estimator;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

json unavailable_cell(double h, const std::string& estimator, const std::string& why) {
    return {{"bandwidth", h},     {"estimator", estimator}, {"status", "unavailable: " + why},
            {"mean", nullptr},    {"median", nullptr},      {"l95", nullptr},
            {"u95", nullptr},     {"n1", nullptr},          {"n0", nullptr},
            {"warnings", json::array()}};
}

const std::vector<std::string> kEstimateColumns{"bandwidth", "estimator", "constrained", "status",
                                                "mean",      "median",    "l95",         "u95",
                                                "n1",        "n0",        "rhat_max",    "warnings"};

const std::vector<std::string> kSimColumns{
    "scenario",     "bandwidth",    "estimator",   "true_rr",  "replicates",
    "failed",       "available",    "mean_estimate", "median_estimate", "bias",
    "rmse",         "coverage",     "mean_width",  "median_width", "share_negative_lower",
    "mean_l95",     "mean_u95",     "max_rhat"};

}  // namespace

json RunConfig::to_json() const {
    json sampler_json = rdrrt::to_json(sampler);
    // Chain seeds derive from the run seed, so the sampler's own field is not used.
    sampler_json.erase("seed");
    json j{{"command", command},
           {"input", input},
           {"columns", {{"x", schema.x}, {"t", schema.t}, {"y", schema.y}}},
           {"threshold", threshold},
           {"bandwidths", bandwidths},
           {"models", models},
           {"constrained", constrained},
           {"sampler", sampler_json},
           {"bootstrap", bootstrap},
           {"seed", seed},
           {"format", format}};
    if (command == "explore") {
        const double hmax = bandwidths.empty() ? 0.0 : *std::max_element(bandwidths.begin(), bandwidths.end());
        j["range"] = {range_lo.value_or(threshold - hmax), range_hi.value_or(threshold + hmax)};
        j["bins"] = bins;
        j["stiffness"] = stiffness ? json(*stiffness) : json("gcv");
    }
    if (command == "simulate") {
        j["scenarios"] = scenarios;
        j["replications"] = replications;
        j["n"] = n;
        j["scenario_config"] = scenario_config;
    }
    return j;
}

void RunConfig::validate() const {
    static const std::vector<std::string> commands{"explore", "estimate", "simulate", "diagnose"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end()) {
        throw InputError("unknown subcommand '" + command + "'");
    }
    if (format != "json" && format != "csv") throw InputError("format must be json or csv");
    if (bandwidths.empty()) throw InputError("at least one bandwidth is required");
    for (double h : bandwidths) Window(threshold, h);
    if (command == "estimate" || command == "simulate") {
        if (models.empty()) throw InputError("at least one model tag or gmm is required");
        for (const auto& m : models) EstimatorSpec::parse(m);
    }
    if (command == "simulate") {
        if (replications < 1) throw InputError("replications must be >= 1");
        if (n < 1) throw InputError("n must be >= 1");
    }
    if (command != "simulate" && input.empty()) throw InputError("--input is required");
    if (bootstrap < 0) throw InputError("bootstrap must be >= 0");
}

CommandResult explore_command(const RunConfig& cfg, std::span<const Observation> data) {
    ExploreOptions o;
    const double hmax = *std::max_element(cfg.bandwidths.begin(), cfg.bandwidths.end());
    o.lo = cfg.range_lo.value_or(cfg.threshold - hmax);
    o.hi = cfg.range_hi.value_or(cfg.threshold + hmax);
    o.bins = cfg.bins;
    o.stiffness = cfg.stiffness;
    const BinnedSummary s = explore(data, cfg.threshold, o);
    CommandResult r;
    r.document = {{"config", cfg.to_json()}, {"summary", to_json(s)}};
    return r;
}

CommandResult estimate_command(const RunConfig& cfg, std::span<const Observation> data) {
    CommandResult r;
    json results = json::array();
    for (std::size_t b = 0; b < cfg.bandwidths.size(); ++b) {
        const double h = cfg.bandwidths[b];
        std::optional<WindowedSample> s;
        try {
            s = window(data, Window(cfg.threshold, h));
        } catch (const EmptyArmError&) {
        }
        for (std::size_t e = 0; e < cfg.models.size(); ++e) {
            const EstimatorSpec est = EstimatorSpec::parse(cfg.models[e]);
            const std::string label = est.is_gmm() ? "gmm" : est.tag;
            if (!s) {
                results.push_back(unavailable_cell(h, label, "empty arm"));
                continue;
            }
            const std::uint64_t seed = cell_seed(cfg.seed, b, e);
            try {
                json cell;
                if (est.is_gmm()) {
                    const GmmFit g = gmm_msmm(*s, cfg.bootstrap, seed);
                    cell = {{"bandwidth", h},         {"estimator", "gmm"}, {"constrained", false},
                            {"status", "ok"},         {"mean", number(g.rrt)},
                            {"median", number(g.rrt)}, {"l95", number(g.l95)},
                            {"u95", number(g.u95)},   {"n1", s->n1},
                            {"n0", s->n0},            {"warnings", g.warnings},
                            {"gmm", to_json(g)}};
                } else {
                    SamplerConfig sc = cfg.sampler;
                    sc.seed = seed;
                    const RrtEstimate fit = estimate_rrt(*s, ModelSpec::parse(est.tag, cfg.constrained), sc);
                    cell = to_json(fit);
                    cell["status"] = "ok";
                }
                results.push_back(cell);
            } catch (const NonIdentifiedError& ex) {
                results.push_back(unavailable_cell(h, label, ex.what()));
            } catch (const NumericalError& ex) {
                r.numerical_failure = true;
                json cell = unavailable_cell(h, label, ex.what());
                cell["status"] = std::string("failed: ") + ex.what();
                results.push_back(cell);
            }
        }
    }
    r.document = {{"config", cfg.to_json()}, {"results", results}, {"diagnostics", json::object()}};
    return r;
}

CommandResult diagnose_command(const RunConfig& cfg, std::span<const Observation> data) {
    CommandResult r;
    json blocks = json::array();
    for (double h : cfg.bandwidths) {
        json block{{"bandwidth", h}};
        try {
            const WindowedSample s = window(data, Window(cfg.threshold, h));
            const CellCounts c = CellCounts::from(s);
            block["status"] = "ok";
            block["n1"] = s.n1;
            block["n0"] = s.n0;
            block["cell_counts"] = to_json(c);
            try {
                block["plug_in_rrt"] = number(plug_in_rrt(c));
            } catch (const NonIdentifiedError&) {
                block["plug_in_rrt"] = nullptr;
            }
            block["f_test"] = to_json(first_stage_f(c));
            block["bounds"] = to_json(balke_pearl_bounds(c));
        } catch (const EmptyArmError&) {
            block["status"] = "unavailable: empty arm";
        }
        blocks.push_back(block);
    }
    r.document = {{"config", cfg.to_json()}, {"results", json::array()}, {"diagnostics", blocks}};
    return r;
}

CommandResult simulate_command(const RunConfig& cfg) {
    ScenarioSpec base;
    base.threshold = cfg.threshold;
    base.bandwidths = cfg.bandwidths;
    base.replications = cfg.replications;
    base.n = cfg.n;
    base.seed = cfg.seed;
    std::vector<std::string> names = cfg.scenarios;
    json file_cfg;
    if (!cfg.scenario_config.empty()) {
        std::ifstream in(cfg.scenario_config);
        if (!in) throw InputError("cannot open scenario config '" + cfg.scenario_config + "'");
        try {
            file_cfg = json::parse(in);
            if (file_cfg.contains("dgp")) base.dgp = dgp_from_json(file_cfg["dgp"]);
            if (file_cfg.contains("n")) base.n = file_cfg["n"].get<int>();
            if (file_cfg.contains("replications")) base.replications = file_cfg["replications"].get<int>();
            if (file_cfg.contains("bandwidths")) base.bandwidths = file_cfg["bandwidths"].get<std::vector<double>>();
            if (file_cfg.contains("scenarios")) names = file_cfg["scenarios"].get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw InputError(std::string("bad scenario config: ") + e.what());
        }
    }
    if (base.replications < 1) throw InputError("replications must be >= 1");
    std::vector<ScenarioSpec> specs;
    for (const auto& name : names) {
        if (name == "all") {
            for (auto s : ScenarioSpec::all(base)) specs.push_back(s);
            continue;
        }
        ScenarioSpec s = base;
        const ScenarioSpec parsed = ScenarioSpec::parse(name);
        s.strength = parsed.strength;
        s.confounding = parsed.confounding;
        s.effect = parsed.effect;
        specs.push_back(s);
    }
    std::vector<EstimatorSpec> estimators;
    for (const auto& m : cfg.models) {
        EstimatorSpec e = EstimatorSpec::parse(m);
        if (!e.is_gmm() && cfg.constrained) e.constrained = true;
        estimators.push_back(e);
    }
    GridOptions opts;
    opts.sampler = cfg.sampler;
    opts.bootstrap = cfg.bootstrap;
    opts.threads = cfg.threads;

    json cells = json::array(), plot = json::array();
    for (const auto& spec : specs) {
        const SimReport rep = run_grid(spec, estimators, opts);
        for (const auto& c : rep.cells) {
            cells.push_back(to_json(c));
            plot.push_back({{"scenario", c.scenario},
                            {"bandwidth", c.bandwidth},
                            {"estimator", c.estimator},
                            {"true_rr", c.true_rr},
                            {"mean", c.available ? number(c.mean_estimate) : json(nullptr)},
                            {"l95", c.available ? number(c.mean_l95) : json(nullptr)},
                            {"u95", c.available ? number(c.mean_u95) : json(nullptr)}});
        }
    }
    json config = cfg.to_json();
    config["dgp"] = to_json(base.dgp);
    config["n"] = base.n;
    config["replications"] = base.replications;
    config["bandwidths"] = base.bandwidths;
    config["scenarios"] = names;
    CommandResult r;
    r.document = {{"config", config}, {"results", cells}, {"interval_plot", plot}, {"diagnostics", json::object()}};
    return r;
}

CommandResult run_command(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.command == "simulate") return simulate_command(cfg);
    const auto data = load_dataset_file(cfg.input, cfg.schema);
    if (cfg.command == "explore") return explore_command(cfg, data);
    if (cfg.command == "diagnose") return diagnose_command(cfg, data);
    return estimate_command(cfg, data);
}

std::string render(const RunConfig& cfg, const json& doc) {
    if (cfg.format == "json") return doc.dump(2) + "\n";
    std::string out = "# config: " + doc["config"].dump() + "\n";
    if (cfg.command == "explore") {
        out += to_csv(doc["summary"]["bins"], {"bin_mid", "mean_y", "mean_t", "n"});
        return out;
    }
    if (cfg.command == "diagnose") {
        json rows = json::array();
        for (const auto& b : doc["diagnostics"]) {
            json row{{"bandwidth", b["bandwidth"]}, {"status", b["status"]}};
            if (b["status"] == "ok") {
                row["n1"] = b["n1"];
                row["n0"] = b["n0"];
                row["plug_in_rrt"] = b["plug_in_rrt"];
                row["F"] = b["f_test"]["F"];
                row["p_value"] = b["f_test"]["p_value"];
                row["bounds_lower"] = b["bounds"]["lower"];
                row["bounds_upper"] = b["bounds"]["upper"];
                row["instrument_inequality_violated"] = b["bounds"]["instrument_inequality_violated"];
            }
            rows.push_back(row);
        }
        return out + to_csv(rows, {"bandwidth", "status", "n1", "n0", "plug_in_rrt", "F", "p_value",
                                   "bounds_lower", "bounds_upper", "instrument_inequality_violated"});
    }
    if (cfg.command == "simulate") return out + to_csv(doc["results"], kSimColumns);
    return out + to_csv(doc["results"], kEstimateColumns);
}

int execute(const RunConfig& cfg, std::string* error_message) {
    try {
        const CommandResult r = run_command(cfg);
        const std::string text = render(cfg, r.document);
        if (cfg.out.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(cfg.out, std::ios::binary);
            if (!f) throw InputError("cannot write output file '" + cfg.out + "'");
            f << text;
            if (cfg.command == "explore" && cfg.format == "csv") {
                std::ofstream sp(cfg.out + ".splines.json", std::ios::binary);
                sp << r.document["summary"]["splines"].dump(2) << "\n";
            }
        }
        return r.numerical_failure ? 2 : 0;
    } catch (const InputError& e) {
        if (error_message) *error_message = e.what();
        return 1;
    } catch (const json::exception& e) {
        if (error_message) *error_message = e.what();
        return 1;
    } catch (const std::exception& e) {
        if (error_message) *error_message = e.what();
        return 2;
    }
}

}  // namespace rdrrt
