#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdrrt/data.hpp"
#include "rdrrt/io.hpp"
#include "rdrrt/mcmc.hpp"

namespace rdrrt {

/// Fully resolved settings of one CLI run. Serialised into every output document.
struct RunConfig {
    std::string command;  // explore | estimate | simulate | diagnose
    std::string input;
    CsvSchema schema;
    double threshold = 0.2;
    std::vector<double> bandwidths{0.025, 0.05, 0.075, 0.1};
    std::vector<std::string> models{"pois.flex", "pois.pois", "pois.prod.flex", "gmm"};
    bool constrained = false;
    SamplerConfig sampler;
    int bootstrap = 2000;
    std::uint64_t seed = 1;
    std::string out;  // empty: stdout
    std::string format = "json";

    // explore
    std::optional<double> range_lo;
    std::optional<double> range_hi;
    int bins = 20;
    std::optional<double> stiffness;

    // simulate
    std::vector<std::string> scenarios{"strong/low/high"};
    int replications = 100;
    int n = 10'000;
    std::string scenario_config;
    int threads = 0;

    json to_json() const;
    /// Throws InputError on values no subcommand accepts.
    void validate() const;
};

/// The run's output: a JSON document plus its CSV rendering when requested.
struct CommandResult {
    json document;
    /// Set when at least one cell failed numerically (exit code 2).
    bool numerical_failure = false;
};

CommandResult explore_command(const RunConfig& cfg, std::span<const Observation> data);
CommandResult estimate_command(const RunConfig& cfg, std::span<const Observation> data);
CommandResult diagnose_command(const RunConfig& cfg, std::span<const Observation> data);
CommandResult simulate_command(const RunConfig& cfg);

/// Loads input when the subcommand needs it and dispatches.
CommandResult run_command(const RunConfig& cfg);

/// Renders a document in cfg.format. CSV output starts with a "# config:" comment.
std::string render(const RunConfig& cfg, const json& document);

/// Runs, writes output and returns the process exit code (0 ok, 1 input/config, 2 numerical).
int execute(const RunConfig& cfg, std::string* error_message = nullptr);

}  // namespace rdrrt
