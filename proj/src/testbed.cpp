#include "iolws/testbed.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "iolws/error.hpp"
#include "iolws/event_queue.hpp"

namespace iolws::sim {

using stack::DevicePhase;
using stack::MasterId;

void TraceLog::record(SimTime at, std::string_view entity, std::string_view from, std::string_view to,
                      std::string_view event)
{
    std::string line = std::to_string(at.count());
    for (std::string_view field : {entity, from, to, event}) {
        line.push_back(' ');
        line.append(field);
    }
    lines_.push_back(std::move(line));
}

std::string TraceLog::str() const
{
    std::string out;
    for (const auto& line : lines_) {
        out += line;
        out.push_back('\n');
    }
    return out;
}

TraceLine parse_trace_line(std::string_view line)
{
    std::istringstream in{std::string(line)};
    TraceLine t;
    long long us = 0;
    if (!(in >> us >> t.entity >> t.from >> t.to >> t.event))
        throw Error(ErrorCode::InvalidParameter, "malformed trace line: " + std::string(line));
    std::string extra;
    if (in >> extra) throw Error(ErrorCode::InvalidParameter, "trailing fields in trace line: " + std::string(line));
    t.at = SimTime{us};
    return t;
}

namespace {

struct ToDevice {
    stack::DeviceEvent event;
};

struct ToMaster {
    MasterId master = 0;
    stack::MasterEvent event;
};

struct Edge {
    bool on = false;
};

using Pending = std::variant<ToDevice, ToMaster, Edge>;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string port_entity(MasterId master, const pdu::PairingIdentity& id)
{
    return "master" + std::to_string(master) + "@" + pdu::to_string(id);
}

std::string_view phase_token(const std::optional<stack::PortPhase>& phase)
{
    return phase ? stack::to_string(*phase) : std::string_view{"-"};
}

class Bed final : public stack::ChannelView {
public:
    Bed(const ScenarioConfig& cfg, Rng& rng, TraceLog* trace)
        : cfg_(cfg), model_{cfg.rssi_map, cfg.per_curve}, rng_(rng), trace_(trace)
    {
    }

    double loss_probability(MasterId m) const override { return links_.at(m).per; }
    double rssi_dbm(MasterId m) const override { return links_.at(m).rssi; }
    std::optional<MasterId> config_channel_owner() const override { return owner_; }

    void set_attenuation(double db)
    {
        Link link{model_.rssi(db), model_.loss_probability(db)};
        for (auto& [id, master] : masters) links_[id] = link;
    }

    void run(SimTime deadline, const std::function<bool()>& done)
    {
        while (!queue.empty() && !done()) {
            if (queue.top().at >= deadline) break;
            auto entry = queue.pop();
            dispatch(entry.payload, entry.at);
        }
    }

    stack::DeviceState device;
    std::map<MasterId, stack::MasterState> masters;
    EventQueue<Pending> queue;

    std::function<void(SimTime, DevicePhase, DevicePhase)> on_device_phase;
    std::function<void(SimTime, MasterId, const stack::PortPhaseChanged&)> on_port_phase;

private:
    struct Link {
        double rssi = 0.0;
        double per = 1.0;
    };

    void dispatch(Pending& payload, SimTime now)
    {
        std::visit(overloaded{
                       [&](ToDevice& d) { step_device(d.event, now); },
                       [&](ToMaster& m) { step_master(m.master, m.event, now); },
                       [&](Edge& e) {
                           set_attenuation(e.on ? cfg_.attenuation_on_db : cfg_.attenuation_off_db);
                           if (trace_) trace_->record(now, "attenuator", e.on ? "OFF" : "ON", e.on ? "ON" : "OFF", "edge");
                       },
                   },
                   payload);
    }

    void step_device(const stack::DeviceEvent& event, SimTime now)
    {
        auto result = stack::device_step(device, event, now, rng_, *this, cfg_.profile);
        device = std::move(result.state);
        for (auto& action : result.actions) {
            std::visit(overloaded{
                           [&](stack::SendPairingRequest& a) {
                               queue.push(now, ToMaster{a.master, stack::PairingRequest{a.uid, a.identity}});
                           },
                           [&](stack::SendResponse& a) {
                               queue.push(now, ToMaster{a.master, stack::DeviceResponse{device.identity, a.kind, a.attempt}});
                           },
                           [&](stack::StartTimer& a) {
                               queue.push(a.at, ToDevice{stack::Timeout{a.kind, a.generation}}, Priority::Late);
                           },
                           [&](stack::PhaseChanged& a) {
                               if (trace_)
                                   trace_->record(now, "device", stack::to_string(a.from), stack::to_string(a.to),
                                                  stack::event_name(event));
                               if (on_device_phase) on_device_phase(now, a.from, a.to);
                           },
                           [&](stack::ConnectionLost&) {},
                           [&](stack::Released&) {},
                       },
                       action);
        }
    }

    void step_master(MasterId id, const stack::MasterEvent& event, SimTime now)
    {
        auto result = stack::master_step(masters.at(id), event, now, rng_, *this, cfg_.profile);
        masters[id] = std::move(result.state);
        for (auto& action : result.actions) {
            std::visit(overloaded{
                           [&](stack::TransmitBeacon& a) {
                               queue.push(now, ToDevice{stack::BeaconReceived{id, rssi_dbm(id), std::move(a.advertised)}});
                           },
                           [&](stack::TransmitFrame& a) {
                               if (a.identity != device.identity) return;
                               queue.push(now, ToDevice{stack::CycleTick{id, a.kind, a.attempt, std::move(a.payload),
                                                                         a.key_material}});
                           },
                           [&](stack::SendPairingAck&) { queue.push(now, ToDevice{stack::PairingAck{id}}); },
                           [&](stack::SendPairingRejected& a) {
                               queue.push(now, ToDevice{stack::PairingRejected{id, a.collision}});
                           },
                           [&](stack::ScheduleSelf& a) { queue.push(a.at, ToMaster{id, std::move(a.event)}); },
                           [&](stack::AcquireConfigChannel&) {
                               if (owner_ && *owner_ != id)
                                   throw Error(ErrorCode::ProtocolViolation, "configuration channel already held");
                               owner_ = id;
                           },
                           [&](stack::ReleaseConfigChannel&) {
                               if (owner_ == id) owner_.reset();
                           },
                           [&](stack::PortPhaseChanged& a) {
                               if (trace_)
                                   trace_->record(now, port_entity(id, a.identity), phase_token(a.from),
                                                  phase_token(a.to), stack::event_name(event));
                               check_single_attachment();
                               if (on_port_phase) on_port_phase(now, id, a);
                           },
                       },
                       action);
        }
    }

    void check_single_attachment() const
    {
        int sessions = 0;
        for (const auto& [id, master] : masters)
            for (const auto& [identity, port] : master.ports)
                if (port.uid == device.uid &&
                    (port.phase == stack::PortPhase::ParameterExchange || port.phase == stack::PortPhase::Cyclic))
                    ++sessions;
        if (sessions > 1) throw Error(ErrorCode::ProtocolViolation, "device holds sessions on two masters");
    }

    const ScenarioConfig& cfg_;
    radio::ChannelModel model_;
    Rng& rng_;
    TraceLog* trace_;
    std::map<MasterId, Link> links_;
    std::optional<MasterId> owner_;
};

Duration draw_jitter(const stack::TimingProfile& p, Rng& rng)
{
    const double u = rng.uniform01();
    const double x = p.jitter_shape == stack::JitterShape::Uniform ? u : 1.0 - std::sqrt(1.0 - u);
    auto us = static_cast<std::int64_t>(x * static_cast<double>(p.phase_jitter_max.count()));
    if (us >= p.phase_jitter_max.count()) us = p.phase_jitter_max.count() - 1;
    return Duration{us};
}

// Session the cycle starts with. Derived from the seed, not the run stream,
// so both modes consume identical draws up to the safety exchange.
stack::Session initial_session(const ScenarioConfig& cfg)
{
    stack::Session s;
    std::uint64_t a = splitmix64(cfg.seed ^ 0x5e55'10f1'cafe'0001ULL);
    std::uint64_t b = splitmix64(a);
    for (std::size_t i = 0; i < 8; ++i) {
        s.key.key_material[i] = static_cast<std::uint8_t>(a >> (8 * i));
        s.key.key_material[8 + i] = static_cast<std::uint8_t>(b >> (8 * i));
    }
    s.safety_armed = cfg.safety;
    return s;
}

void attach(Bed& bed, const ScenarioConfig& cfg, bool coordinated)
{
    const auto session = initial_session(cfg);
    stack::DeviceState d;
    d.safety_enabled = cfg.safety;
    d.coordinated_release = coordinated;
    bed.device = stack::attached_device(d, kMasterA, session);

    stack::MasterState a;
    a.id = kMasterA;
    a.safety_enabled = cfg.safety;
    a = stack::attached_master(a, d.identity, d.uid, session);
    const auto generation = a.ports.at(d.identity).timer_generation;
    bed.masters[kMasterA] = std::move(a);

    // A's last delivered cycle is at t = 0.
    bed.queue.push(cfg.profile.w_cycle, ToMaster{kMasterA, stack::CycleTimer{d.identity, generation}});
    bed.device.timer_generation = 1;
    bed.queue.push(cfg.profile.w_cycle, ToDevice{stack::Timeout{stack::TimerKind::Supervision, 1}}, Priority::Late);
}

DevicePhase target_phase(const ScenarioConfig& cfg)
{
    return cfg.safety ? DevicePhase::SafetyOperational : DevicePhase::Connected;
}

} // namespace

CycleOutcome run_connect_cycle(const ScenarioConfig& cfg, Rng& rng, TraceLog* trace)
{
    const auto& p = cfg.profile;
    const SimTime t_on = cfg.first_on_edge();
    const Duration period = cfg.cycle_period();
    const SimTime deadline = t_on + period * cfg.max_carry_cycles + cfg.on_duration;

    Bed bed(cfg, rng, trace);
    const Duration jitter = draw_jitter(p, rng);
    attach(bed, cfg, false);
    bed.set_attenuation(cfg.attenuation_off_db);
    for (const auto& edge : attenuator_process(cfg, deadline)) bed.queue.push(edge.at, Edge{edge.on});

    // Beacon grid is anchored so the first beacon after the ON edge comes
    // `jitter` later.
    const SimTime first_beacon{(t_on + jitter).count() % p.beacon_interval().count()};
    bed.queue.push(first_beacon, ToMaster{kMasterA, stack::BeaconTimer{false}});

    const DevicePhase target = target_phase(cfg);
    std::optional<SimTime> reached;
    CycleOutcome out;
    bed.on_device_phase = [&](SimTime at, DevicePhase from, DevicePhase to) {
        if (to == target && !reached) reached = at;
        if (stack::is_operational(from) && !stack::is_operational(to) && !out.detection) out.detection = at;
    };
    bed.run(deadline, [&] { return reached.has_value(); });

    if (!reached || *reached < t_on) {
        out.span = period * (cfg.max_carry_cycles + 1);
        return out;
    }
    out.duration = *reached - t_on;
    out.span = period * (1 + (*reached - t_on) / period);
    return out;
}

CycleOutcome run_handover_cycle(const ScenarioConfig& cfg, Rng& rng, TraceLog* trace)
{
    const auto& p = cfg.profile;
    const auto& ho = cfg.handover;
    Bed bed(cfg, rng, trace);
    const Duration jitter = draw_jitter(p, rng);
    attach(bed, cfg, ho.contention);

    stack::MasterState b;
    b.id = kMasterB;
    b.safety_enabled = cfg.safety;
    bed.masters[kMasterB] = b;
    bed.set_attenuation(cfg.attenuation_on_db);

    const auto uid = bed.device.uid;
    const auto identity = bed.device.identity;
    const stack::SmiCommand unpair{stack::SmiCommand::Op::Unpair, uid, identity,
                                   ho.contention ? stack::UnpairMode::Closeout : stack::UnpairMode::Abrupt};
    const stack::SmiCommand pair{stack::SmiCommand::Op::Pair, uid, identity, stack::UnpairMode::Abrupt};

    bed.queue.push(SimTime{0}, ToMaster{kMasterA, unpair});
    if (ho.order == HandoverOrder::Simultaneous) bed.queue.push(SimTime{0}, ToMaster{kMasterB, pair});
    bed.queue.push(jitter, ToMaster{kMasterB, stack::BeaconTimer{false}});

    bed.on_port_phase = [&](SimTime at, MasterId id, const stack::PortPhaseChanged& change) {
        if (ho.order == HandoverOrder::Sequential && id == kMasterA && !change.to)
            bed.queue.push(at, ToMaster{kMasterB, pair});
    };

    const DevicePhase target = target_phase(cfg);
    std::optional<SimTime> reached;
    CycleOutcome out;
    bed.on_device_phase = [&](SimTime at, DevicePhase from, DevicePhase to) {
        if (to == target && bed.device.current_master == kMasterB && !reached) reached = at;
        if (stack::is_operational(from) && !stack::is_operational(to) && !out.detection) out.detection = at;
    };
    bed.run(SimTime{0} + ho.window, [&] { return reached.has_value(); });

    if (!reached) {
        out.span = ho.window;
        return out;
    }
    const SimTime start = ho.start == HandoverStart::LastDeliveredCycle ? SimTime{0} : out.detection.value_or(SimTime{0});
    out.duration = *reached - start;
    out.span = *reached - SimTime{0};
    return out;
}

Duration measure_connect(const ScenarioConfig& config, Rng& rng, TraceLog* trace)
{
    config.validate();
    auto out = run_connect_cycle(config, rng, trace);
    if (!out.duration)
        throw Error(ErrorCode::NotConnectedWithinWindow, "no connection within the ON window");
    return *out.duration;
}

Duration measure_handover(const ScenarioConfig& config, Rng& rng, TraceLog* trace)
{
    config.validate();
    auto out = run_handover_cycle(config, rng, trace);
    if (!out.duration)
        throw Error(ErrorCode::NotConnectedWithinWindow, "no handover within the measurement window");
    return *out.duration;
}

} // namespace iolws::sim
