#pragma once

// Measurement campaigns: configuration, the attenuator schedule, the
// repetition loop with discard accounting, and the durations CSV format.

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iolws/protocol.hpp"
#include "iolws/radio_channel.hpp"

namespace iolws::sim {

using stack::Duration;
using stack::SimTime;

enum class ScenarioKind { RoamingConnect, Handover };

// Whether master B starts advertising together with A's unpair or only once
// A's close-out has completed.
enum class HandoverOrder { Simultaneous, Sequential };

// Reference instant of a handover measurement.
enum class HandoverStart { LastDeliveredCycle, LossDetection };

std::string_view to_string(ScenarioKind kind) noexcept;
std::string_view to_string(HandoverOrder order) noexcept;
std::string_view to_string(HandoverStart start) noexcept;

struct HandoverOptions {
    HandoverOrder order = HandoverOrder::Simultaneous;
    HandoverStart start = HandoverStart::LastDeliveredCycle;
    /// false: single-master hook. A drops the session abruptly, no close-out,
    /// no shared-channel arbitration on the device side.
    bool contention = true;
    Duration window{3'000'000};
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::RoamingConnect;
    bool safety = false;
    double attenuation_on_db = 30.0;
    double attenuation_off_db = 103.0;
    Duration on_duration{2'000'000};
    Duration off_duration{2'000'000};
    unsigned repetitions = 300;
    std::uint64_t seed = 1;
    /// Further ON windows a connect attempt may run into before the
    /// repetition is discarded.
    unsigned max_carry_cycles = 1;
    stack::TimingProfile profile;
    radio::RssiMap rssi_map;
    radio::PerCurve per_curve = radio::calibrated_per_curve();
    HandoverOptions handover;

    Duration cycle_period() const { return on_duration + off_duration; }
    SimTime first_on_edge() const { return SimTime{0} + off_duration; }

    // Throws Error(InvalidParameter).
    void validate() const;

    /// Stable key=value rendering of every field; input of digest().
    std::string canonical() const;
    std::string digest() const;
};

struct AttenuatorEdge {
    SimTime at{0};
    bool on = false;
};

// Edges in [0, horizon): OFF at t = 0, then alternating ON/OFF.
std::vector<AttenuatorEdge> attenuator_process(const ScenarioConfig& config, SimTime horizon);

// Rounds up to the 100 us sampling grid. Throws Error(InvalidParameter) for
// negative input.
Duration quantize_duration(Duration t);

inline constexpr Duration kSamplingStep{100};

struct DurationSeries {
    std::string scenario_digest;
    std::uint64_t seed = 0;
    std::vector<Duration> samples; ///< quantized
    std::uint64_t discarded = 0;
    Duration simulated_span{0};

    std::vector<double> seconds() const;

    friend bool operator==(const DurationSeries&, const DurationSeries&) = default;
};

// Runs repetitions until `config.repetitions` valid samples exist.
// Repetition attempt i draws from Rng::stream(seed, i). Throws
// Error(TooManyDiscards) once discarded exceeds 10x the repetitions.
DurationSeries run_scenario(const ScenarioConfig& config);

/// Result of one sweep entry: the series, or the error it raised.
struct SweepOutcome {
    std::optional<DurationSeries> series;
    std::exception_ptr error;
};

// Independent scenarios, optionally on several threads. Output order follows
// the input order regardless of thread count.
std::vector<SweepOutcome> run_sweep_outcomes(const std::vector<ScenarioConfig>& configs, unsigned threads = 1);

// As run_sweep_outcomes, rethrowing the first error in input order.
std::vector<DurationSeries> run_sweep(const std::vector<ScenarioConfig>& configs, unsigned threads = 1);

// --- CSV ---------------------------------------------------------------------

/// "# tool_version=..", "# seed=..", "# config_digest=.." lines.
std::string artifact_header(std::uint64_t seed, std::string_view config_digest);

/// Seconds with exactly four decimals, computed in integer arithmetic.
std::string format_seconds(Duration d);

// Parses a decimal seconds string exactly into microseconds.
Duration parse_seconds(std::string_view text);

std::string durations_csv(const DurationSeries& series);
void write_durations_csv(const std::filesystem::path& path, const DurationSeries& series);

// Throws Error(IoError) with the path on failure.
DurationSeries read_durations_csv(const std::filesystem::path& path);
DurationSeries parse_durations_csv(std::string_view text);

} // namespace iolws::sim
