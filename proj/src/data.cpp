#include "rdrrt/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rdrrt/error.hpp"

namespace rdrrt {

namespace {

// Inclusion slack for |x - x0| <= h so that decimal bandwidth edges survive rounding.
constexpr double kEdgeSlack = 1e-12;

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t start = field.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? std::string{} : field.substr(start));
    }
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InputError("missing column '" + name + "' in header");
}

std::string row_error(std::size_t row, const std::string& col, const std::string& what) {
    return "row " + std::to_string(row) + ": " + col + " " + what;
}

double parse_number(const std::string& s, std::size_t row, const std::string& col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw InputError(row_error(row, col, "is not a finite number"));
    }
    return v;
}

int parse_binary(const std::string& s, std::size_t row, const std::string& col) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw InputError(row_error(row, col, "must be 0/1"));
}

}  // namespace

Window::Window(double x0, double h) : x0_(x0), h_(h) {
    if (!std::isfinite(x0) || x0 <= 0.0 || x0 >= 1.0) {
        throw InputError("threshold must lie strictly inside (0, 1)");
    }
    if (!std::isfinite(h) || h <= 0.0) throw InputError("bandwidth must be > 0");
    if (x0 - h < -kEdgeSlack || x0 + h > 1.0 + kEdgeSlack) {
        throw InputError("window [x0-h, x0+h] leaves [0, 1]");
    }
}

std::vector<Observation> WindowedSample::to_observations() const {
    std::vector<Observation> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.x_star + threshold, r.t, r.y});
    return out;
}

CellCounts CellCounts::from(const WindowedSample& s) {
    CellCounts c;
    for (const auto& r : s.records) ++c.cells[r.z][2 * r.y + r.t];
    return c;
}

std::size_t CellCounts::n(int z) const {
    const auto& a = cells[z];
    return a[0] + a[1] + a[2] + a[3];
}

double CellCounts::prob(int z, int y, int t) const {
    return static_cast<double>(count(z, y, t)) / static_cast<double>(n(z));
}

double CellCounts::mean_y(int z) const { return prob(z, 1, 0) + prob(z, 1, 1); }
double CellCounts::mean_t(int z) const { return prob(z, 0, 1) + prob(z, 1, 1); }
double CellCounts::mean_y_tbar(int z) const { return prob(z, 1, 0); }
double CellCounts::mean_y_t(int z) const { return prob(z, 1, 1); }

std::vector<Observation> load_dataset(std::istream& in, const CsvSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("no observations");
    const auto header = split(line, schema.delimiter);
    const std::size_t ix = column_index(header, schema.x);
    const std::size_t it = column_index(header, schema.t);
    const std::size_t iy = column_index(header, schema.y);
    const std::size_t need = std::max({ix, it, iy}) + 1;

    std::vector<Observation> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto f = split(line, schema.delimiter);
        if (f.size() < need) {
            throw InputError("row " + std::to_string(row) + ": expected at least " +
                             std::to_string(need) + " columns, got " + std::to_string(f.size()));
        }
        Observation o;
        o.x = parse_number(f[ix], row, schema.x);
        if (o.x < 0.0 || o.x > 1.0) throw InputError(row_error(row, schema.x, "outside [0,1]"));
        o.t = parse_binary(f[it], row, schema.t);
        o.y = parse_binary(f[iy], row, schema.y);
        out.push_back(o);
    }
    if (out.empty()) throw InputError("no observations");
    return out;
}

std::vector<Observation> load_dataset_file(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file '" + path + "'");
    return load_dataset(in, schema);
}

WindowedSample window(std::span<const Observation> data, const Window& w) {
    WindowedSample s;
    s.threshold = w.threshold();
    s.bandwidth = w.bandwidth();
    for (const auto& o : data) {
        const double xs = o.x - w.threshold();
        if (std::abs(xs) > w.bandwidth() + kEdgeSlack) continue;
        WindowedRecord r;
        r.x_star = xs;
        r.z = o.x >= w.threshold() ? 1 : 0;
        r.t = o.t;
        r.y = o.y;
        r.y_tbar = o.y * (1 - o.t);
        (r.z == 1 ? s.n1 : s.n0) += 1;
        s.records.push_back(r);
    }
    if (s.n1 == 0 || s.n0 == 0) throw EmptyArmError();
    return s;
}

double plug_in_rrt(double mean_y1, double mean_y0, double mean_y_tbar1, double mean_y_tbar0) {
    const double denom = mean_y_tbar1 - mean_y_tbar0;
    if (denom == 0.0) throw NonIdentifiedError("unidentified: zero denominator");
    return 1.0 - (mean_y1 - mean_y0) / denom;
}

double plug_in_rrt(const CellCounts& c) {
    return plug_in_rrt(c.mean_y(1), c.mean_y(0), c.mean_y_tbar(1), c.mean_y_tbar(0));
}

}  // namespace rdrrt
