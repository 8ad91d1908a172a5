#pragma once

// Shielded two-master test bed: one device, masters A (id 1) and B (id 2)
// behind a splitter, a programmable attenuator in front of the device.
// One call simulates one measurement cycle from its own time origin.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iolws/scenario.hpp"

namespace iolws::sim {

inline constexpr stack::MasterId kMasterA = 1;
inline constexpr stack::MasterId kMasterB = 2;

/// `timestamp_us entity phase_from phase_to event`, one line per transition.
class TraceLog {
public:
    void record(SimTime at, std::string_view entity, std::string_view from, std::string_view to,
                std::string_view event);

    const std::vector<std::string>& lines() const noexcept { return lines_; }
    std::string str() const;

private:
    std::vector<std::string> lines_;
};

struct TraceLine {
    SimTime at{0};
    std::string entity;
    std::string from;
    std::string to;
    std::string event;
};

// Throws Error(InvalidParameter) on malformed lines.
TraceLine parse_trace_line(std::string_view line);

struct CycleOutcome {
    std::optional<Duration> duration; ///< unquantized; empty when discarded
    Duration span{0};                 ///< simulated time consumed by the cycle
    std::optional<SimTime> detection; ///< device noticed loss of the old session
};

// Connect cycle: attenuator OFF at t = 0 with the device attached, first ON
// edge at off_duration. Duration runs from that edge to CONNECTED (IOLW) or
// SAFETY_OPERATIONAL (IOLWS).
CycleOutcome run_connect_cycle(const ScenarioConfig& config, Rng& rng, TraceLog* trace = nullptr);

// Handover cycle: device attached to A, both masters at attenuation_on_db.
// The controller unpairs A and pairs B at t = 0, the instant of A's last
// delivered cycle.
CycleOutcome run_handover_cycle(const ScenarioConfig& config, Rng& rng, TraceLog* trace = nullptr);

// As above, but a cycle without a connection throws
// Error(NotConnectedWithinWindow).
Duration measure_connect(const ScenarioConfig& config, Rng& rng, TraceLog* trace = nullptr);
Duration measure_handover(const ScenarioConfig& config, Rng& rng, TraceLog* trace = nullptr);

} // namespace iolws::sim
