#include "iolws/scenario.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "iolws/digest.hpp"
#include "iolws/error.hpp"
#include "iolws/testbed.hpp"
#include "iolws/version.hpp"

namespace iolws::sim {

std::string_view to_string(ScenarioKind kind) noexcept
{
    return kind == ScenarioKind::RoamingConnect ? "roaming_connect" : "handover";
}

std::string_view to_string(HandoverOrder order) noexcept
{
    return order == HandoverOrder::Simultaneous ? "simultaneous" : "sequential";
}

std::string_view to_string(HandoverStart start) noexcept
{
    return start == HandoverStart::LastDeliveredCycle ? "last_delivered" : "detection";
}

void ScenarioConfig::validate() const
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidParameter, what); };
    if (repetitions < 1) fail("repetitions must be at least 1");
    if (!(attenuation_on_db >= 0.0 && attenuation_on_db <= 120.0))
        fail("attenuation_on_db must lie in [0, 120] dB");
    if (!(attenuation_off_db >= 0.0 && attenuation_off_db <= 120.0))
        fail("attenuation_off_db must lie in [0, 120] dB");
    if (!(attenuation_off_db > attenuation_on_db)) fail("attenuation_off_db must exceed attenuation_on_db");
    if (on_duration.count() <= 0 || off_duration.count() <= 0) fail("ON and OFF durations must be positive");
    if (handover.window.count() <= 0) fail("handover window must be positive");
    profile.validate();
    per_curve.validate();
}

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string ScenarioConfig::canonical() const
{
    std::ostringstream out;
    out << "kind=" << to_string(kind) << '\n'
        << "safety=" << (safety ? "true" : "false") << '\n'
        << "attenuation_on_db=" << num(attenuation_on_db) << '\n'
        << "attenuation_off_db=" << num(attenuation_off_db) << '\n'
        << "on_duration_us=" << on_duration.count() << '\n'
        << "off_duration_us=" << off_duration.count() << '\n'
        << "repetitions=" << repetitions << '\n'
        << "seed=" << seed << '\n'
        << "max_carry_cycles=" << max_carry_cycles << '\n'
        << "profile.w_cycle_us=" << profile.w_cycle.count() << '\n'
        << "profile.scan_dwell_us=" << profile.scan_dwell.count() << '\n'
        << "profile.pairing_handshake_cycles=" << profile.pairing_handshake_cycles << '\n'
        << "profile.base_connect_floor_us=" << profile.base_connect_floor.count() << '\n'
        << "profile.phase_jitter_max_us=" << profile.phase_jitter_max.count() << '\n'
        << "profile.jitter_shape="
        << (profile.jitter_shape == stack::JitterShape::Uniform ? "uniform" : "triangular") << '\n'
        << "profile.safety_param_cycles=" << profile.safety_param_cycles << '\n'
        << "profile.cycle_transmissions=" << profile.cycle_transmissions << '\n'
        << "profile.loss_threshold=" << profile.loss_threshold << '\n'
        << "profile.closeout_exchanges=" << profile.closeout_exchanges << '\n'
        << "profile.backoff_min_cycles=" << profile.backoff_min_cycles << '\n'
        << "profile.backoff_max_cycles=" << profile.backoff_max_cycles << '\n'
        << "rssi_map=";
    bool first = true;
    for (const auto& a : rssi_map.anchors()) {
        out << (first ? "" : ",") << num(a.attenuation_db) << ':' << num(a.rssi_dbm);
        first = false;
    }
    out << '\n'
        << "per_curve.rssi_mid=" << num(per_curve.rssi_mid) << '\n'
        << "per_curve.slope=" << num(per_curve.slope) << '\n'
        << "per_curve.floor=" << num(per_curve.floor) << '\n'
        << "handover.order=" << to_string(handover.order) << '\n'
        << "handover.start=" << to_string(handover.start) << '\n'
        << "handover.contention=" << (handover.contention ? "true" : "false") << '\n'
        << "handover.window_us=" << handover.window.count() << '\n';
    return out.str();
}

std::string ScenarioConfig::digest() const
{
    return short_digest(canonical());
}

std::vector<AttenuatorEdge> attenuator_process(const ScenarioConfig& config, SimTime horizon)
{
    std::vector<AttenuatorEdge> edges;
    SimTime t{0};
    bool on = false;
    while (t < horizon) {
        edges.push_back({t, on});
        t += on ? config.on_duration : config.off_duration;
        on = !on;
    }
    return edges;
}

Duration quantize_duration(Duration t)
{
    if (t.count() < 0) throw Error(ErrorCode::InvalidParameter, "duration must not be negative");
    const auto step = kSamplingStep.count();
    return Duration{(t.count() + step - 1) / step * step};
}

std::vector<double> DurationSeries::seconds() const
{
    std::vector<double> out;
    out.reserve(samples.size());
    for (auto d : samples) out.push_back(static_cast<double>(d.count()) / 1e6);
    return out;
}

DurationSeries run_scenario(const ScenarioConfig& config)
{
    config.validate();
    DurationSeries series;
    series.scenario_digest = config.digest();
    series.seed = config.seed;
    series.samples.reserve(config.repetitions);

    const std::uint64_t discard_limit = 10ULL * config.repetitions;
    for (std::uint64_t attempt = 0; series.samples.size() < config.repetitions; ++attempt) {
        Rng rng = Rng::stream(config.seed, attempt);
        CycleOutcome out = config.kind == ScenarioKind::RoamingConnect ? run_connect_cycle(config, rng)
                                                                       : run_handover_cycle(config, rng);
        series.simulated_span += out.span;
        if (out.duration) {
            series.samples.push_back(quantize_duration(*out.duration));
            continue;
        }
        if (++series.discarded > discard_limit) {
            throw Error(ErrorCode::TooManyDiscards,
                        std::to_string(series.discarded) + " discarded repetitions at " +
                            num(config.attenuation_on_db) + " dB (" + std::string(to_string(config.kind)) + ")");
        }
    }
    return series;
}

std::vector<SweepOutcome> run_sweep_outcomes(const std::vector<ScenarioConfig>& configs, unsigned threads)
{
    std::vector<SweepOutcome> results(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            try {
                results[i].series = run_scenario(configs[i]);
            } catch (...) {
                results[i].error = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

std::vector<DurationSeries> run_sweep(const std::vector<ScenarioConfig>& configs, unsigned threads)
{
    std::vector<DurationSeries> out;
    for (auto& r : run_sweep_outcomes(configs, threads)) {
        if (r.error) std::rethrow_exception(r.error);
        out.push_back(std::move(*r.series));
    }
    return out;
}

// --- CSV ---------------------------------------------------------------------

std::string artifact_header(std::uint64_t seed, std::string_view config_digest)
{
    std::string out = "# tool_version=" + std::string(kToolVersion) + '\n';
    out += "# seed=" + std::to_string(seed) + '\n';
    out += "# config_digest=" + std::string(config_digest) + '\n';
    return out;
}

std::string format_seconds(Duration d)
{
    if (d.count() < 0) throw Error(ErrorCode::InvalidParameter, "duration must not be negative");
    const auto q = quantize_duration(d).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%04lld", static_cast<long long>(q / 1'000'000),
                  static_cast<long long>((q % 1'000'000) / 100));
    return buf;
}

Duration parse_seconds(std::string_view text)
{
    auto bad = [&] { return Error(ErrorCode::InvalidParameter, "not a duration in seconds: '" + std::string(text) + "'"); };
    auto dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() || frac.size() > 6) throw bad();
    long long us = 0;
    for (char c : whole) {
        if (c < '0' || c > '9') throw bad();
        us = us * 10 + (c - '0');
    }
    us *= 1'000'000;
    long long scale = 100'000;
    for (char c : frac) {
        if (c < '0' || c > '9') throw bad();
        us += (c - '0') * scale;
        scale /= 10;
    }
    return Duration{us};
}

std::string durations_csv(const DurationSeries& series)
{
    std::string out = artifact_header(series.seed, series.scenario_digest);
    out += "# discarded=" + std::to_string(series.discarded) + '\n';
    out += "# simulated_span_us=" + std::to_string(series.simulated_span.count()) + '\n';
    out += "rep_index,duration_s\n";
    for (std::size_t i = 0; i < series.samples.size(); ++i) {
        out += std::to_string(i);
        out.push_back(',');
        out += format_seconds(series.samples[i]);
        out.push_back('\n');
    }
    return out;
}

void write_durations_csv(const std::filesystem::path& path, const DurationSeries& series)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    f << durations_csv(series);
    if (!f) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

DurationSeries parse_durations_csv(std::string_view text)
{
    DurationSeries series;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            while (!key.empty() && key.front() == ' ') key.erase(key.begin());
            std::string value = line.substr(eq + 1);
            try {
                if (key == "seed") series.seed = std::stoull(value);
                else if (key == "config_digest") series.scenario_digest = value;
                else if (key == "discarded") series.discarded = std::stoull(value);
                else if (key == "simulated_span_us") series.simulated_span = Duration{std::stoll(value)};
            } catch (const std::exception&) {
                throw Error(ErrorCode::IoError, "bad header value: " + line);
            }
            continue;
        }
        if (!header_seen) {
            if (line != "rep_index,duration_s") throw Error(ErrorCode::IoError, "unexpected CSV header: " + line);
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::IoError, "malformed row: " + line);
        if (std::to_string(series.samples.size()) != line.substr(0, comma))
            throw Error(ErrorCode::IoError, "rep_index out of sequence: " + line);
        series.samples.push_back(parse_seconds(std::string_view(line).substr(comma + 1)));
    }
    if (!header_seen) throw Error(ErrorCode::IoError, "missing CSV header");
    return series;
}

DurationSeries read_durations_csv(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    try {
        return parse_durations_csv(buf.str());
    } catch (const Error& e) {
        throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
    }
}

} // namespace iolws::sim
