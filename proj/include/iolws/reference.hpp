#pragma once

// Reference measurements shipped in data/reference_tables.yaml.

#include <filesystem>
#include <optional>
#include <vector>

#include "iolws/calibration.hpp"
#include "iolws/metrics.hpp"
#include "iolws/scenario.hpp"

namespace iolws::config {

/// Targets for handover, stated relative to the connect measurements.
struct HandoverTargets {
    double surplus_s = 0.100;           ///< handover mean minus connect mean
    double surplus_tolerance_s = 0.050;
    double outlier_s = 2.6;
    double max_limit_s = 3.0;
    double max_attenuation_db = 80.0;   ///< weaker settings are not measured
};

struct QuantilePoint {
    sim::ScenarioKind kind = sim::ScenarioKind::RoamingConnect;
    double attenuation_db = 0.0;
    double rssi_dbm = 0.0;
    double p = 0.99;
    double reference_s = 0.0;
    double limit_s = 0.0;
};

struct ReferenceTables {
    std::vector<metrics::ReferenceRow> connect;
    std::vector<metrics::ReferenceRow> handover_printed;
    HandoverTargets handover;
    std::vector<QuantilePoint> quantile_points;

    std::optional<metrics::ReferenceRow> connect_row(double attenuation_db) const;

    /// IOLW connect means, the calibration target.
    std::vector<sim::CalibrationRow> calibration_rows() const;
};

// Throws Error(ConfigError) naming the file.
ReferenceTables load_reference(const std::filesystem::path& path);
ReferenceTables parse_reference(std::string_view yaml, std::string_view source = "<reference>");

std::filesystem::path default_reference_path();

} // namespace iolws::config
