#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace rdrrt {

/// One patient record: risk score, treatment prescribed, binary outcome.
struct Observation {
    double x = 0.0;
    int t = 0;
    int y = 0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Analysis window [x0 - h, x0 + h] around the threshold.
class Window {
public:
    Window(double x0, double h);

    double threshold() const { return x0_; }
    double bandwidth() const { return h_; }

private:
    double x0_;
    double h_;
};

struct WindowedRecord {
    double x_star = 0.0;  // x - x0
    int z = 0;
    int t = 0;
    int y = 0;
    int y_tbar = 0;  // y * (1 - t)
};

/// Observations retained by a window, centred at the threshold.
struct WindowedSample {
    double threshold = 0.2;
    double bandwidth = 0.0;
    std::vector<WindowedRecord> records;
    std::size_t n1 = 0;
    std::size_t n0 = 0;

    std::size_t size() const { return records.size(); }
    /// Back to raw observations (x = x_star + threshold).
    std::vector<Observation> to_observations() const;
};

/// Per-arm (y, t) cell counts. cells[z][2*y + t].
struct CellCounts {
    std::array<std::array<std::size_t, 4>, 2> cells{};

    static CellCounts from(const WindowedSample& s);

    std::size_t count(int z, int y, int t) const { return cells[z][2 * y + t]; }
    std::size_t n(int z) const;

    double mean_y(int z) const;       // E(Y | Z=z)
    double mean_t(int z) const;       // E(T | Z=z)
    double mean_y_tbar(int z) const;  // E(Y(1-T) | Z=z)
    double mean_y_t(int z) const;     // E(YT | Z=z)
    /// P(Y=y, T=t | Z=z)
    double prob(int z, int y, int t) const;
};

/// Column names in the delimited input.
struct CsvSchema {
    std::string x = "x";
    std::string t = "t";
    std::string y = "y";
    char delimiter = ',';
};

/// Parses a header-led delimited stream. Row numbers in errors count data rows from 1.
std::vector<Observation> load_dataset(std::istream& in, const CsvSchema& schema = {});
std::vector<Observation> load_dataset_file(const std::string& path, const CsvSchema& schema = {});

/// Keeps |x - x0| <= h; z = 1 iff x >= x0. Throws EmptyArmError if either side is empty.
WindowedSample window(std::span<const Observation> data, const Window& w);

/// 1 - [E(Y|1) - E(Y|0)] / [E(Y(1-T)|1) - E(Y(1-T)|0)]. May be negative.
/// Throws NonIdentifiedError when the denominator is exactly zero.
double plug_in_rrt(double mean_y1, double mean_y0, double mean_y_tbar1, double mean_y_tbar0);
double plug_in_rrt(const CellCounts& c);

}  // namespace rdrrt
