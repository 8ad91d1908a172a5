#include "iolws/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "iolws/error.hpp"

namespace iolws::sim {

MeanRunner scenario_runner(ScenarioConfig base)
{
    return [base](const radio::PerCurve& curve, double attenuation_db) -> std::optional<double> {
        ScenarioConfig cfg = base;
        cfg.per_curve = curve;
        cfg.attenuation_on_db = attenuation_db;
        try {
            auto series = run_scenario(cfg);
            double sum = 0.0;
            for (double s : series.seconds()) sum += s;
            return sum / static_cast<double>(series.samples.size());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::TooManyDiscards) return std::nullopt;
            throw;
        }
    };
}

bool CalibrationResult::diverged(const CalibrationOptions& options) const
{
    return std::any_of(residuals.begin(), residuals.end(), [&](const RowResidual& r) {
        return r.rssi_dbm >= options.moderate_rssi_dbm && !(std::abs(r.rel_error) <= options.diverged_rel_error);
    });
}

namespace {

constexpr double kStrongRssi = -37.0;
constexpr double kOffRssi = -103.0;
constexpr double kInfeasiblePenalty = 1e6;

bool admissible(const radio::PerCurve& c, double max_floor)
{
    if (!(c.slope > 0.0) || c.floor < 0.0 || c.floor > max_floor || c.floor >= 0.05) return false;
    return radio::per_from_rssi(kStrongRssi, c) <= 0.05 && radio::per_from_rssi(kOffRssi, c) >= 0.999;
}

struct Evaluation {
    double objective = std::numeric_limits<double>::infinity();
    std::vector<RowResidual> residuals;
};

} // namespace

CalibrationResult fit_per_curve(const std::vector<CalibrationRow>& reference, const MeanRunner& sim,
                                const CalibrationOptions& options)
{
    if (reference.size() < 4) throw Error(ErrorCode::InvalidParameter, "calibration needs at least four reference rows");
    for (const auto& row : reference)
        if (!(row.mean_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "reference means must be positive");

    CalibrationResult result;
    auto evaluate = [&](const radio::PerCurve& curve) {
        Evaluation ev;
        ev.objective = 0.0;
        ++result.evaluations;
        for (const auto& row : reference) {
            RowResidual r{row.attenuation_db, row.rssi_dbm, row.mean_s, sim(curve, row.attenuation_db), 0.0};
            if (r.simulated_s) {
                r.rel_error = (*r.simulated_s - row.mean_s) / row.mean_s;
                ev.objective += r.rel_error * r.rel_error;
            } else {
                r.rel_error = std::numeric_limits<double>::infinity();
                ev.objective += kInfeasiblePenalty;
            }
            ev.residuals.push_back(r);
        }
        return ev;
    };

    radio::PerCurve best = options.initial;
    if (!admissible(best, options.max_floor)) throw Error(ErrorCode::InvalidParameter, "initial PER curve violates the calibration bounds");
    Evaluation best_ev = evaluate(best);
    std::array<double, 3> step{options.mid_step_db, options.slope_step, options.floor_step};

    for (unsigned iter = 0; iter < options.budget; ++iter) {
        ++result.iterations;
        bool improved = false;
        for (std::size_t k = 0; k < step.size() && !improved; ++k) {
            for (double dir : {+1.0, -1.0}) {
                radio::PerCurve cand = best;
                double& field = k == 0 ? cand.rssi_mid : (k == 1 ? cand.slope : cand.floor);
                field += dir * step[k];
                if (k == 2) field = std::clamp(field, 0.0, options.max_floor);
                if (cand == best || !admissible(cand, options.max_floor)) continue;
                Evaluation ev = evaluate(cand);
                if (ev.objective < best_ev.objective) {
                    best = cand;
                    best_ev = std::move(ev);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved)
            for (double& s : step) s /= 2.0;
    }

    result.curve = best;
    result.residuals = std::move(best_ev.residuals);
    result.objective = best_ev.objective;
    return result;
}

radio::PerCurve calibrate_per_curve(const std::vector<CalibrationRow>& reference, const MeanRunner& sim,
                                    const CalibrationOptions& options)
{
    auto result = fit_per_curve(reference, sim, options);
    if (result.diverged(options)) {
        std::string detail;
        for (const auto& r : result.residuals) {
            char buf[96];
            std::snprintf(buf, sizeof buf, " %g dB: %+.1f %%;", r.attenuation_db, 100.0 * r.rel_error);
            detail += buf;
        }
        throw Error(ErrorCode::CalibrationDiverged, "relative error above threshold on a strong/moderate row:" + detail);
    }
    return result.curve;
}

} // namespace iolws::sim
