#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "iolws/radio_channel.hpp"
#include "iolws/scenario.hpp"

namespace iolws::sim {

struct CalibrationRow {
    double attenuation_db = 0.0;
    double rssi_dbm = 0.0;
    double mean_s = 0.0;
};

/// Simulated mean connect duration in seconds under `curve`; nullopt when the
/// scenario is infeasible.
using MeanRunner = std::function<std::optional<double>(const radio::PerCurve& curve, double attenuation_db)>;

// Mean of run_scenario(base with the given curve and attenuation).
MeanRunner scenario_runner(ScenarioConfig base);

struct CalibrationOptions {
    unsigned budget = 40; ///< coordinate-descent iterations
    radio::PerCurve initial{-63.0, 0.5, 0.0001};
    double mid_step_db = 8.0;
    double slope_step = 0.2;
    double floor_step = 0.00005;
    double max_floor = 0.0001;
    /// Rows at or above this RSSI must end within diverged_rel_error.
    double moderate_rssi_dbm = -83.0;
    double diverged_rel_error = 0.25;
};

struct RowResidual {
    double attenuation_db = 0.0;
    double rssi_dbm = 0.0;
    double reference_s = 0.0;
    std::optional<double> simulated_s;
    double rel_error = 0.0; ///< signed; infeasible rows count as +inf
};

struct CalibrationResult {
    radio::PerCurve curve;
    std::vector<RowResidual> residuals;
    double objective = 0.0; ///< sum of squared relative errors
    unsigned iterations = 0;
    unsigned evaluations = 0;

    // True if any strong/moderate row misses by more than the threshold.
    bool diverged(const CalibrationOptions& options) const;
};

// Coordinate descent with step halving over (rssi_mid, slope, floor),
// keeping floor <= max_floor, per(-37 dBm) <= 0.05 and
// per(-103 dBm) >= 0.999. Deterministic
// for a deterministic runner. Throws Error(InvalidParameter) with fewer than
// four reference rows.
CalibrationResult fit_per_curve(const std::vector<CalibrationRow>& reference, const MeanRunner& sim,
                                const CalibrationOptions& options = {});

// fit_per_curve, throwing Error(CalibrationDiverged) when the fit diverged.
radio::PerCurve calibrate_per_curve(const std::vector<CalibrationRow>& reference, const MeanRunner& sim,
                                    const CalibrationOptions& options = {});

} // namespace iolws::sim
