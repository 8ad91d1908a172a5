#pragma once

// Summary statistics, empirical CDFs and comparison against reference rows.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iolws/scenario.hpp"

namespace iolws::metrics {

/// Durations in seconds. std uses the n - 1 denominator (0 for n = 1).
struct SummaryStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

// Throws Error(EmptySeries).
SummaryStats summarize(const std::vector<double>& seconds);
SummaryStats summarize(const sim::DurationSeries& series);

/// F(t) = #{samples <= t} / n over a sorted copy of the samples.
class Ecdf {
public:
    // Throws Error(EmptySeries).
    explicit Ecdf(std::vector<double> seconds);
    explicit Ecdf(const sim::DurationSeries& series);

    const std::vector<double>& samples() const noexcept { return sorted_; }
    std::size_t size() const noexcept { return sorted_.size(); }

    double operator()(double t) const;

    // Smallest sample t with F(t) >= p. Throws Error(InvalidParameter) unless
    // 0 < p <= 1.
    double quantile(double p) const;

    /// (distinct sample, F at that sample), ascending; the last step is 1.
    std::vector<std::pair<double, double>> steps() const;

private:
    std::vector<double> sorted_;
};

enum class Mode { Iolw, Iolws };
std::string_view to_string(Mode mode) noexcept;

/// Relative tolerances per field; a field with tolerance 0 is not compared.
struct Tolerance {
    double min = 0.10;
    double max = 0.10;
    double mean = 0.10;
    double std = 0.50;
};

struct ReferenceStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

struct ReferenceRow {
    double attenuation_db = 0.0;
    double rssi_dbm = 0.0;
    ReferenceStats iolw;
    ReferenceStats iolws;
    Tolerance tolerance;

    const ReferenceStats& stats(Mode mode) const { return mode == Mode::Iolw ? iolw : iolws; }
};

struct FieldCheck {
    std::string field;
    double simulated = 0.0;
    double reference = 0.0;
    double rel_error = 0.0; ///< signed, (simulated - reference) / reference
    double tolerance = 0.0;
    bool compared = true;
    bool pass = true;
};

struct ComparisonReport {
    double attenuation_db = 0.0;
    Mode mode = Mode::Iolw;
    std::vector<FieldCheck> fields; ///< min, max, mean, std

    bool pass() const;
    const FieldCheck& field(std::string_view name) const;
};

// Throws Error(RowMismatch) when attenuation_db differs from the row's and
// Error(InvalidParameter) for a negative tolerance.
ComparisonReport compare_to_reference(const SummaryStats& stats, double attenuation_db, const ReferenceRow& row,
                                      Mode mode);

// Header comment lines, then "duration_s,cumulative_probability" and one row
// per step. Durations print with 4 decimals, probabilities with %.17g.
std::string ecdf_csv(const Ecdf& ecdf, std::uint64_t seed, std::string_view config_digest);

// Throws Error(IoError) naming the path.
void export_ecdf_csv(const std::filesystem::path& path, const Ecdf& ecdf, std::uint64_t seed,
                     std::string_view config_digest);

/// Steps read back from an eCDF CSV.
struct EcdfTable {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::vector<std::pair<double, double>> steps;

    // Same lower-order-statistic rule as Ecdf::quantile.
    double quantile(double p) const;
};

EcdfTable parse_ecdf_csv(std::string_view text);
EcdfTable import_ecdf_csv(const std::filesystem::path& path);

} // namespace iolws::metrics
