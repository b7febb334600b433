#pragma once

#include "json.hpp"
#include <string>

#include "rdrrt/data.hpp"
#include "rdrrt/explore.hpp"
#include "rdrrt/freq.hpp"
#include "rdrrt/mcmc.hpp"
#include "rdrrt/models.hpp"
#include "rdrrt/sim.hpp"

namespace rdrrt {

using json = nlohmann::json;

/// Finite doubles as numbers; NaN as null; +/-infinity as the strings "inf"/"-inf".
json number(double v);

json to_json(const CellCounts& c);
json to_json(const RrtEstimate& e);
json to_json(const GmmFit& g);
json to_json(const BoundsResult& b);
json to_json(const FTestResult& f);
json to_json(const BinnedSummary& s);
json to_json(const SamplerConfig& c);
json to_json(const DgpCoefficients& c);
json to_json(const SimCell& c, bool with_runs = false);
json to_json(const SimReport& r, bool with_runs = false);

/// Reads the fields present in `j` over the defaults in `c`.
DgpCoefficients dgp_from_json(const json& j, DgpCoefficients c = {});

/// One CSV line per row of `rows` (an array of flat objects) using `columns`.
/// Strings are quoted when they contain the delimiter, quotes or newlines;
/// arrays are joined with ';'.
std::string to_csv(const json& rows, const std::vector<std::string>& columns);

}  // namespace rdrrt
