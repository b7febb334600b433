// rdrrt: risk ratio for the treated from fuzzy regression-discontinuity data.
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rdrrt/commands.hpp"

namespace {

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw CLI::ValidationError("bad number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> parse_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    rdrrt::RunConfig cfg;
    std::string bandwidths = "0.025,0.05,0.075,0.1";
    std::string models = "pois.flex,pois.pois,pois.prod.flex,gmm";
    std::string scenarios = "strong/low/high";
    std::string range;
    double stiffness = -1.0;

    CLI::App app{"Risk ratio for the treated in fuzzy regression-discontinuity designs"};
    app.require_subcommand(1);
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threshold", cfg.threshold, "Threshold on the risk-score scale")->capture_default_str();
        sub->add_option("--bandwidths", bandwidths, "Comma-separated bandwidths")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "Base random seed")->capture_default_str();
        sub->add_option("--out", cfg.out, "Output file (default: stdout)");
        sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    };
    auto add_input = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "Delimited input with a header row")->required();
        sub->add_option("--x-col", cfg.schema.x, "Risk-score column")->capture_default_str();
        sub->add_option("--t-col", cfg.schema.t, "Treatment column")->capture_default_str();
        sub->add_option("--y-col", cfg.schema.y, "Outcome column")->capture_default_str();
    };
    auto add_estimation = [&](CLI::App* sub) {
        sub->add_option("--models", models, "Comma-separated: pois.pois, pois.flex, pois.prod.flex, gmm")->capture_default_str();
        sub->add_flag("--constrained", cfg.constrained, "Gamma prior on the RRT (Bayesian models)");
        sub->add_option("--chains", cfg.sampler.chains)->capture_default_str();
        sub->add_option("--burnin", cfg.sampler.burn_in)->capture_default_str();
        sub->add_option("--iters", cfg.sampler.iterations, "Iterations after burn-in")->capture_default_str();
        sub->add_option("--retain", cfg.sampler.retain, "Last draws kept per chain")->capture_default_str();
        sub->add_option("--bootstrap", cfg.bootstrap, "GMM bootstrap replicates")->capture_default_str();
    };

    auto* explore = app.add_subcommand("explore", "Binned means and per-side smoothing splines");
    add_input(explore);
    add_common(explore);
    explore->add_option("--range", range, "lo,hi of the binned range (default: threshold +/- largest bandwidth)");
    explore->add_option("--bins", cfg.bins)->capture_default_str();
    explore->add_option("--stiffness", stiffness, "Scale-free spline stiffness (default: GCV)");

    auto* estimate = app.add_subcommand("estimate", "RRT estimates per bandwidth and estimator");
    add_input(estimate);
    add_common(estimate);
    add_estimation(estimate);

    auto* diagnose = app.add_subcommand("diagnose", "First-stage F-test, bounds and cell counts");
    add_input(diagnose);
    add_common(diagnose);

    auto* simulate = app.add_subcommand("simulate", "Simulation study over the scenario grid");
    add_common(simulate);
    add_estimation(simulate);
    simulate->add_option("--scenarios", scenarios, "Comma-separated strength/confounding/effect, or all")->capture_default_str();
    simulate->add_option("--replications", cfg.replications)->capture_default_str();
    simulate->add_option("--n", cfg.n, "Records per simulated dataset")->capture_default_str();
    simulate->add_option("--scenario-config", cfg.scenario_config, "JSON file with dgp coefficients and grid settings");
    simulate->add_option("--threads", cfg.threads, "Worker threads (0: all cores)")->capture_default_str();

    try {
        app.parse(argc, argv);
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.bandwidths = parse_doubles(bandwidths);
        cfg.models = parse_list(models);
        cfg.scenarios = parse_list(scenarios);
        if (!range.empty()) {
            const auto r = parse_doubles(range);
            if (r.size() != 2) throw CLI::ValidationError("--range needs lo,hi");
            cfg.range_lo = r[0];
            cfg.range_hi = r[1];
        }
        if (stiffness >= 0.0) cfg.stiffness = stiffness;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::string err;
    const int code = rdrrt::execute(cfg, &err);
    if (!err.empty()) std::cerr << "error: " << err << "\n";
    return code;
}
