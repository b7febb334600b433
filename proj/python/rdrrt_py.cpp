#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rdrrt/data.hpp"
#include "rdrrt/error.hpp"
#include "rdrrt/explore.hpp"
#include "rdrrt/freq.hpp"
#include "rdrrt/io.hpp"
#include "rdrrt/models.hpp"
#include "rdrrt/sim.hpp"

namespace py = pybind11;
using namespace rdrrt;

namespace {

py::object to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: {
            // the document writes infinities as strings; Python has real ones
            const auto& s = j.get_ref<const std::string&>();
            if (s == "inf") return py::float_(INFINITY);
            if (s == "-inf") return py::float_(-INFINITY);
            return py::str(s);
        }
        case json::value_t::array: {
            py::list l;
            for (const auto& v : j) l.append(to_py(v));
            return l;
        }
        case json::value_t::object: {
            py::dict d;
            for (const auto& [k, v] : j.items()) d[py::str(k)] = to_py(v);
            return d;
        }
        default: return py::none();
    }
}

std::vector<Observation> observations(const std::vector<double>& x, const std::vector<int>& t,
                                      const std::vector<int>& y) {
    if (x.size() != t.size() || x.size() != y.size()) throw InputError("x, t and y must have equal length");
    std::vector<Observation> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if ((t[i] != 0 && t[i] != 1) || (y[i] != 0 && y[i] != 1)) throw InputError("t and y must be 0/1");
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw InputError("x outside [0,1]");
        out[i] = {x[i], t[i], y[i]};
    }
    return out;
}

WindowedSample windowed(const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y,
                        double threshold, double bandwidth) {
    return window(observations(x, t, y), Window(threshold, bandwidth));
}

py::tuple as_arrays(const std::vector<Observation>& d) {
    std::vector<double> x(d.size());
    std::vector<int> t(d.size()), y(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        x[i] = d[i].x;
        t[i] = d[i].t;
        y[i] = d[i].y;
    }
    const auto n = static_cast<py::ssize_t>(d.size());
    return py::make_tuple(py::array_t<double>(n, x.data()), py::array_t<int>(n, t.data()),
                          py::array_t<int>(n, y.data()));
}

SamplerConfig sampler(int chains, int burn_in, int iterations, int retain, std::uint64_t seed) {
    SamplerConfig c;
    c.chains = chains;
    c.burn_in = burn_in;
    c.iterations = iterations;
    c.retain = retain;
    c.seed = seed;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Risk ratio for the treated from fuzzy regression-discontinuity data";

    auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    (void)input_error;

    m.def(
        "load_csv",
        [](const std::string& path, const std::string& x, const std::string& t, const std::string& y,
           char delimiter) { return as_arrays(load_dataset_file(path, CsvSchema{x, t, y, delimiter})); },
        py::arg("path"), py::arg("x") = "x", py::arg("t") = "t", py::arg("y") = "y", py::arg("delimiter") = ',',
        "Reads a delimited file into (x, t, y) arrays.");

    m.def(
        "generate",
        [](const std::string& scenario, int replicate, int n, std::uint64_t seed) {
            ScenarioSpec s = ScenarioSpec::parse(scenario);
            s.n = n;
            s.seed = seed;
            return as_arrays(generate(s, replicate));
        },
        py::arg("scenario") = "strong/low/high", py::arg("replicate") = 0, py::arg("n") = 10'000,
        py::arg("seed") = 1, "Simulated dataset for a scenario such as 'weak/high/none'.");

    m.def(
        "cell_counts",
        [](const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y, double threshold,
           double bandwidth) { return to_py(to_json(CellCounts::from(windowed(x, t, y, threshold, bandwidth)))); },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("threshold") = 0.2, py::arg("bandwidth") = 0.1);

    m.def(
        "plug_in_rrt",
        [](const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y, double threshold,
           double bandwidth) { return plug_in_rrt(CellCounts::from(windowed(x, t, y, threshold, bandwidth))); },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("threshold") = 0.2, py::arg("bandwidth") = 0.1);

    m.def(
        "estimate",
        [](const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y,
           const std::string& model, bool constrained, double threshold, double bandwidth, int chains,
           int burn_in, int iterations, int retain, std::uint64_t seed) {
            const auto s = windowed(x, t, y, threshold, bandwidth);
            const ModelSpec spec = ModelSpec::parse(model, constrained);
            RrtEstimate e;
            {
                py::gil_scoped_release release;
                e = estimate_rrt(s, spec, sampler(chains, burn_in, iterations, retain, seed));
            }
            return to_py(to_json(e));
        },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("model") = "pois.flex", py::arg("constrained") = false,
        py::arg("threshold") = 0.2, py::arg("bandwidth") = 0.1, py::arg("chains") = 2,
        py::arg("burn_in") = 10'000, py::arg("iterations") = 50'000, py::arg("retain") = 1'000,
        py::arg("seed") = 20150101, "Bayesian RRT posterior summary for one model and bandwidth.");

    m.def(
        "gmm",
        [](const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y, double threshold,
           double bandwidth, int bootstrap, std::uint64_t seed) {
            const auto s = windowed(x, t, y, threshold, bandwidth);
            GmmFit g;
            {
                py::gil_scoped_release release;
                g = gmm_msmm(s, bootstrap, seed);
            }
            return to_py(to_json(g));
        },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("threshold") = 0.2, py::arg("bandwidth") = 0.1,
        py::arg("bootstrap") = 2000, py::arg("seed") = 1, "GMM estimate with a percentile bootstrap interval.");

    m.def(
        "diagnose",
        [](const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y, double threshold,
           double bandwidth) {
            const auto s = windowed(x, t, y, threshold, bandwidth);
            py::dict d;
            d["f_test"] = to_py(to_json(first_stage_f(s)));
            d["bounds"] = to_py(to_json(balke_pearl_bounds(s)));
            d["cell_counts"] = to_py(to_json(CellCounts::from(s)));
            return d;
        },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("threshold") = 0.2, py::arg("bandwidth") = 0.1,
        "First-stage F-test, Balke-Pearl bounds and cell counts.");

    m.def(
        "explore",
        [](const std::vector<double>& x, const std::vector<int>& t, const std::vector<int>& y, double threshold,
           double lo, double hi, int bins, std::optional<double> stiffness) {
            ExploreOptions o;
            o.lo = lo;
            o.hi = hi;
            o.bins = bins;
            o.stiffness = stiffness;
            return to_py(to_json(explore(observations(x, t, y), threshold, o)));
        },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("threshold") = 0.2, py::arg("lo") = 0.1,
        py::arg("hi") = 0.3, py::arg("bins") = 20, py::arg("stiffness") = py::none(),
        "Binned means with per-side smoothing splines.");

    m.def(
        "simulate",
        [](const std::string& scenario, const std::vector<std::string>& estimators,
           const std::vector<double>& bandwidths, int replications, int n, std::uint64_t seed, int bootstrap,
           int burn_in, int iterations, int retain, int threads) {
            ScenarioSpec spec = ScenarioSpec::parse(scenario);
            spec.bandwidths = bandwidths;
            spec.replications = replications;
            spec.n = n;
            spec.seed = seed;
            if (replications < 1) throw InputError("replications must be >= 1");
            std::vector<EstimatorSpec> es;
            for (const auto& e : estimators) es.push_back(EstimatorSpec::parse(e));
            GridOptions o;
            o.bootstrap = bootstrap;
            o.sampler.burn_in = burn_in;
            o.sampler.iterations = iterations;
            o.sampler.retain = retain;
            o.threads = threads;
            SimReport r;
            {
                py::gil_scoped_release release;
                r = run_grid(spec, es, o);
            }
            return to_py(to_json(r));
        },
        py::arg("scenario") = "strong/low/high", py::arg("estimators") = std::vector<std::string>{"gmm"},
        py::arg("bandwidths") = std::vector<double>{0.025, 0.05, 0.075, 0.1}, py::arg("replications") = 100,
        py::arg("n") = 10'000, py::arg("seed") = 1, py::arg("bootstrap") = 2000, py::arg("burn_in") = 10'000,
        py::arg("iterations") = 50'000, py::arg("retain") = 1'000, py::arg("threads") = 0,
        "Simulation grid for one scenario; one row per bandwidth and estimator.");

    m.attr("MODEL_TAGS") = ModelSpec::tags();
}
