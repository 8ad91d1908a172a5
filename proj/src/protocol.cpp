#include "iolws/protocol.hpp"

#include <array>
#include <cmath>

#include "iolws/error.hpp"
#include "iolws/radio_channel.hpp"

namespace iolws::stack {

void TimingProfile::validate() const
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidParameter, what); };
    if (w_cycle.count() <= 0) fail("w_cycle must be positive");
    if (scan_dwell.count() < 0) fail("scan_dwell must not be negative");
    if (pairing_handshake_cycles == 0) fail("pairing_handshake_cycles must be at least 1");
    if (base_connect_floor != scan_dwell + w_cycle * pairing_handshake_cycles)
        fail("base_connect_floor must equal scan_dwell + pairing_handshake_cycles * w_cycle");
    if (phase_jitter_max.count() <= 0) fail("phase_jitter_max must be positive");
    if (safety_param_cycles == 0) fail("safety_param_cycles must be at least 1");
    if (cycle_transmissions == 0) fail("cycle_transmissions must be at least 1");
    if (loss_threshold == 0) fail("loss_threshold must be at least 1");
    if (closeout_exchanges == 0) fail("closeout_exchanges must be at least 1");
    if (backoff_min_cycles == 0 || backoff_max_cycles < backoff_min_cycles)
        fail("backoff cycles must satisfy 1 <= min <= max");
}

std::string_view to_string(DevicePhase phase) noexcept
{
    switch (phase) {
    case DevicePhase::Unpaired: return "UNPAIRED";
    case DevicePhase::Scanning: return "SCANNING";
    case DevicePhase::Pairing: return "PAIRING";
    case DevicePhase::Connected: return "CONNECTED";
    case DevicePhase::SafetyParamExchange: return "SAFETY_PARAM_EXCHANGE";
    case DevicePhase::SafetyOperational: return "SAFETY_OPERATIONAL";
    case DevicePhase::Lost: return "LOST";
    }
    return "?";
}

std::string_view to_string(FrameKind kind) noexcept
{
    switch (kind) {
    case FrameKind::Handshake: return "handshake";
    case FrameKind::ProcessData: return "process_data";
    case FrameKind::SafetyParameter: return "safety_parameter";
    case FrameKind::Closeout: return "closeout";
    }
    return "?";
}

std::string_view to_string(PortPhase phase) noexcept
{
    switch (phase) {
    case PortPhase::Enabled: return "ENABLED";
    case PortPhase::Handshake: return "HANDSHAKE";
    case PortPhase::ParameterExchange: return "PARAMETER_EXCHANGE";
    case PortPhase::Cyclic: return "CYCLIC";
    case PortPhase::Closing: return "CLOSING";
    case PortPhase::ClosingBackoff: return "CLOSING_BACKOFF";
    }
    return "?";
}

std::string_view event_name(const DeviceEvent& event) noexcept
{
    static constexpr std::array<std::string_view, 6> names{"none",         "beacon_received",  "cycle_tick",
                                                           "pairing_ack",  "pairing_rejected", "timeout"};
    return names[event.index()];
}

std::string_view event_name(const MasterEvent& event) noexcept
{
    static constexpr std::array<std::string_view, 6> names{"none",        "beacon_timer",    "pairing_request",
                                                           "cycle_timer", "device_response", "smi_command"};
    return names[event.index()];
}

double exchange_loss(double per, FrameKind kind, const TimingProfile& profile)
{
    if (kind == FrameKind::ProcessData || kind == FrameKind::SafetyParameter)
        return std::pow(per, static_cast<double>(profile.cycle_transmissions));
    return per;
}

pdu::SessionKey random_key(Rng& rng)
{
    pdu::SessionKey key;
    for (std::size_t word = 0; word < 2; ++word) {
        std::uint64_t v = rng.next_u64();
        for (std::size_t i = 0; i < 8; ++i) key.key_material[word * 8 + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
    return key;
}

// --- device ----------------------------------------------------------------

namespace {

[[noreturn]] void violation(const DeviceState& s, std::string_view what)
{
    throw Error(ErrorCode::ProtocolViolation,
                std::string(what) + " in phase " + std::string(to_string(s.phase)));
}

class DeviceMachine {
public:
    DeviceMachine(const DeviceState& s, SimTime now, Rng& rng, const ChannelView& ch, const TimingProfile& p)
        : s_(s), now_(now), rng_(rng), channel_(ch), p_(p) {}

    DeviceStep finish() { return {std::move(s_), std::move(out_)}; }

    void set_phase(DevicePhase to)
    {
        if (s_.phase == to) return;
        out_.push_back(PhaseChanged{s_.phase, to});
        s_.phase = to;
    }

    void on(const std::monostate&) {}

    void on(const BeaconReceived& ev)
    {
        if (s_.phase != DevicePhase::Scanning) return;
        if (radio::sample_frame_loss(channel_.loss_probability(ev.master), rng_)) return;
        bool listed = false;
        for (DeviceUid uid : ev.advertised) listed = listed || uid == s_.uid;
        if (!listed) return;

        s_.current_master = ev.master;
        s_.awaiting_ack = true;
        set_phase(DevicePhase::Pairing);
        out_.push_back(SendPairingRequest{ev.master, s_.uid, s_.identity});
        arm(TimerKind::AckTimeout, now_ + p_.w_cycle);
    }

    void on(const PairingAck& ev)
    {
        if (s_.phase != DevicePhase::Pairing || !s_.awaiting_ack || s_.current_master != ev.master)
            violation(s_, "unexpected pairing ack");
        s_.awaiting_ack = false;
        s_.progress = 0;
        s_.missed_cycles = 0;
        // First handshake frame is due right after the dwell.
        arm(TimerKind::Supervision, now_ + p_.scan_dwell + p_.w_cycle);
    }

    void on(const PairingRejected& ev)
    {
        if (s_.phase != DevicePhase::Pairing || s_.current_master != ev.master)
            violation(s_, "unexpected pairing rejection");
        detach();
        set_phase(DevicePhase::Scanning);
    }

    void on(const Timeout& ev)
    {
        if (ev.generation != s_.timer_generation) return;
        if (ev.kind == TimerKind::AckTimeout) {
            if (s_.phase == DevicePhase::Pairing && s_.awaiting_ack) {
                detach();
                set_phase(DevicePhase::Scanning);
            }
            return;
        }
        if ((s_.phase == DevicePhase::Pairing && !s_.awaiting_ack) || is_operational(s_.phase)) miss();
    }

    void on(const CycleTick& ev)
    {
        bool attached = s_.current_master == ev.master &&
                        (s_.phase == DevicePhase::Pairing || is_operational(s_.phase) || s_.phase == DevicePhase::Lost);
        if (!attached) {
            if (ev.kind == FrameKind::Closeout) return;
            violation(s_, "frame from unattached master");
        }
        if (s_.phase == DevicePhase::Pairing && s_.awaiting_ack) violation(s_, "handshake frame before ack");
        check_kind(ev.kind);

        bool lost = radio::sample_frame_loss(exchange_loss(channel_.loss_probability(ev.master), ev.kind, p_), rng_);
        if (s_.phase == DevicePhase::Lost) {
            if (!lost) closeout_exchange(ev);
            return;
        }
        if (lost) {
            miss();
            return;
        }
        s_.missed_cycles = 0;
        switch (ev.kind) {
        case FrameKind::Handshake: handshake_exchange(ev); break;
        case FrameKind::SafetyParameter: parameter_exchange(ev); break;
        case FrameKind::ProcessData: process_exchange(ev); break;
        case FrameKind::Closeout: closeout_exchange(ev); break;
        }
        if (s_.phase == DevicePhase::Pairing || is_operational(s_.phase)) arm(TimerKind::Supervision, now_ + p_.w_cycle);
    }

private:
    void check_kind(FrameKind kind) const
    {
        bool ok = false;
        switch (s_.phase) {
        case DevicePhase::Pairing: ok = kind == FrameKind::Handshake; break;
        case DevicePhase::Connected:
        case DevicePhase::SafetyOperational: ok = kind == FrameKind::ProcessData || kind == FrameKind::Closeout; break;
        case DevicePhase::SafetyParamExchange:
            ok = kind == FrameKind::SafetyParameter || kind == FrameKind::Closeout;
            break;
        case DevicePhase::Lost: ok = kind == FrameKind::Closeout; break;
        default: break;
        }
        if (!ok) violation(s_, std::string(to_string(kind)) + " frame");
    }

    void handshake_exchange(const CycleTick& ev)
    {
        out_.push_back(SendResponse{ev.master, ev.kind, ev.attempt});
        if (++s_.progress < p_.pairing_handshake_cycles) return;
        s_.progress = 0;
        s_.session = Session{pdu::SessionKey{}, now_, false};
        set_phase(DevicePhase::Connected);
        if (s_.safety_enabled) set_phase(DevicePhase::SafetyParamExchange);
    }

    void parameter_exchange(const CycleTick& ev)
    {
        if (ev.key_material) s_.pending_key = ev.key_material;
        out_.push_back(SendResponse{ev.master, ev.kind, ev.attempt});
        if (++s_.progress < p_.safety_param_cycles) return;
        if (!s_.pending_key) violation(s_, "parameter exchange without key material");
        s_.progress = 0;
        s_.session->key = *s_.pending_key;
        s_.session->safety_armed = true;
        s_.pending_key.reset();
        s_.last_accepted_mcnt.reset();
        set_phase(DevicePhase::SafetyOperational);
    }

    void process_exchange(const CycleTick& ev)
    {
        if (s_.phase == DevicePhase::SafetyOperational && !ev.payload.empty()) {
            pdu::CounterWindow window{s_.last_accepted_mcnt, pdu::kDefaultCounterSpan};
            auto decoded = pdu::decode_output_pdu(ev.payload, s_.session->key, s_.identity, window);
            if (!decoded.ok()) {
                // Frame arrived but fails verification; treated like a lost cycle.
                miss();
                return;
            }
            s_.last_accepted_mcnt = decoded.pdu.control_mcnt.mcnt;
        }
        out_.push_back(SendResponse{ev.master, ev.kind, ev.attempt});
    }

    void closeout_exchange(const CycleTick& ev)
    {
        if (ev.attempt != s_.closeout_attempt) {
            s_.closeout_attempt = ev.attempt;
            s_.progress = 0;
        }
        out_.push_back(SendResponse{ev.master, ev.kind, ev.attempt});
        if (++s_.progress >= p_.closeout_exchanges) release();
    }

    void miss()
    {
        if (++s_.missed_cycles < p_.loss_threshold) {
            arm(TimerKind::Supervision, now_ + p_.w_cycle);
            return;
        }
        if (s_.phase == DevicePhase::Pairing) {
            detach();
            set_phase(DevicePhase::Scanning);
            return;
        }
        MasterId master = *s_.current_master;
        set_phase(DevicePhase::Lost);
        out_.push_back(ConnectionLost{master, now_});
        disarm();
        if (!s_.coordinated_release) {
            detach();
            set_phase(DevicePhase::Scanning);
        }
    }

    void release()
    {
        MasterId master = *s_.current_master;
        detach();
        set_phase(DevicePhase::Unpaired);
        out_.push_back(Released{master});
        set_phase(DevicePhase::Scanning);
    }

    void detach()
    {
        s_.current_master.reset();
        s_.session.reset();
        s_.pending_key.reset();
        s_.last_accepted_mcnt.reset();
        s_.missed_cycles = 0;
        s_.progress = 0;
        s_.closeout_attempt = 0;
        s_.awaiting_ack = false;
        disarm();
    }

    void arm(TimerKind kind, SimTime at)
    {
        ++s_.timer_generation;
        out_.push_back(StartTimer{kind, at, s_.timer_generation});
    }

    void disarm() { ++s_.timer_generation; }

    DeviceState s_;
    std::vector<DeviceAction> out_;
    SimTime now_;
    Rng& rng_;
    const ChannelView& channel_;
    const TimingProfile& p_;
};

} // namespace

DeviceStep device_step(const DeviceState& state, const DeviceEvent& event, SimTime now, Rng& rng,
                       const ChannelView& channel, const TimingProfile& profile)
{
    DeviceMachine m(state, now, rng, channel, profile);
    if (!std::holds_alternative<std::monostate>(event) && state.phase == DevicePhase::Unpaired)
        m.set_phase(DevicePhase::Scanning);
    std::visit([&](const auto& ev) { m.on(ev); }, event);
    return m.finish();
}

DeviceState attached_device(DeviceState base, MasterId master, const Session& session)
{
    base.current_master = master;
    base.session = session;
    base.phase = session.safety_armed ? DevicePhase::SafetyOperational : DevicePhase::Connected;
    base.missed_cycles = 0;
    base.progress = 0;
    base.closeout_attempt = 0;
    base.awaiting_ack = false;
    base.last_accepted_mcnt.reset();
    base.pending_key.reset();
    return base;
}

// --- master ----------------------------------------------------------------

bool MasterState::advertises(DeviceUid uid) const
{
    for (const auto& [id, port] : ports)
        if (port.uid == uid && port.phase == PortPhase::Enabled) return true;
    return false;
}

std::vector<DeviceUid> MasterState::advertised() const
{
    std::vector<DeviceUid> uids;
    if (port_mode != PortMode::RoamingAutoPairing && port_mode != PortMode::Roaming) return uids;
    for (const auto& [id, port] : ports)
        if (port.phase == PortPhase::Enabled) uids.push_back(port.uid);
    return uids;
}

MasterState smi_pair(const MasterState& master, pdu::PairingIdentity identity, DeviceUid uid)
{
    auto it = master.ports.find(identity);
    if (it != master.ports.end()) {
        if (it->second.uid == uid) return master;
        throw Error(ErrorCode::SlotOccupied, "port " + pdu::to_string(identity) + " is held by another device");
    }
    MasterState next = master;
    Port port;
    port.uid = uid;
    port.timer_generation = next.next_timer_generation++;
    next.ports.emplace(identity, port);
    return next;
}

MasterState smi_unpair(const MasterState& master, pdu::PairingIdentity identity, UnpairMode mode)
{
    auto it = master.ports.find(identity);
    if (it == master.ports.end())
        throw Error(ErrorCode::UnknownDevice, "no device enabled on port " + pdu::to_string(identity));
    MasterState next = master;
    Port& port = next.ports.at(identity);
    bool has_session = port.phase == PortPhase::Cyclic || port.phase == PortPhase::ParameterExchange;
    if (mode == UnpairMode::Abrupt || !has_session) {
        next.ports.erase(identity);
        return next;
    }
    port.phase = PortPhase::Closing;
    port.attempt = 1;
    port.progress = 0;
    port.misses = 0;
    port.awaiting_response = false;
    return next;
}

MasterState attached_master(MasterState base, pdu::PairingIdentity identity, DeviceUid uid, const Session& session)
{
    Port port;
    port.uid = uid;
    port.phase = PortPhase::Cyclic;
    port.session = session;
    port.timer_generation = base.next_timer_generation++;
    base.ports[identity] = port;
    return base;
}

namespace {

class MasterMachine {
public:
    MasterMachine(const MasterState& s, SimTime now, Rng& rng, const ChannelView& ch, const TimingProfile& p)
        : s_(s), now_(now), rng_(rng), channel_(ch), p_(p)
    {
        auto owner = channel_.config_channel_owner();
        s_.config_channel_busy = owner.has_value() && *owner != s_.id;
    }

    MasterStep finish()
    {
        bool needs_channel = false;
        for (const auto& [id, port] : s_.ports)
            needs_channel = needs_channel || port.phase == PortPhase::Handshake || port.phase == PortPhase::Closing;
        if (s_.holds_config_channel && !needs_channel) release_channel();
        return {std::move(s_), std::move(out_)};
    }

    void on(const std::monostate&) {}

    void on(const BeaconTimer& ev)
    {
        if (!ev.retry) out_.push_back(ScheduleSelf{now_ + p_.beacon_interval(), BeaconTimer{false}});
        auto uids = s_.advertised();
        if (uids.empty()) return;
        if (s_.config_channel_busy) {
            out_.push_back(ScheduleSelf{now_ + backoff(), BeaconTimer{true}});
            return;
        }
        out_.push_back(TransmitBeacon{std::move(uids)});
    }

    void on(const PairingRequest& ev)
    {
        if (radio::sample_frame_loss(channel_.loss_probability(s_.id), rng_)) return;
        auto it = s_.ports.find(ev.identity);
        if (it == s_.ports.end() || it->second.uid != ev.uid || it->second.phase != PortPhase::Enabled) {
            out_.push_back(SendPairingRejected{ev.uid, false});
            return;
        }
        if (s_.config_channel_busy) {
            out_.push_back(SendPairingRejected{ev.uid, true});
            out_.push_back(ScheduleSelf{now_ + backoff(), BeaconTimer{true}});
            return;
        }
        acquire_channel();
        Port& port = it->second;
        port.progress = 0;
        port.misses = 0;
        port.awaiting_response = false;
        port.timer_generation = s_.next_timer_generation++;
        set_phase(ev.identity, port, PortPhase::Handshake);
        out_.push_back(SendPairingAck{ev.uid});
        out_.push_back(ScheduleSelf{now_ + p_.scan_dwell + p_.w_cycle, CycleTimer{ev.identity, port.timer_generation}});
    }

    void on(const CycleTimer& ev)
    {
        auto it = s_.ports.find(ev.identity);
        if (it == s_.ports.end() || it->second.timer_generation != ev.generation) return;
        const pdu::PairingIdentity id = ev.identity;
        Port& port = it->second;

        if (port.phase == PortPhase::ClosingBackoff) {
            port.phase = PortPhase::Closing;
            port.progress = 0;
            port.misses = 0;
            port.awaiting_response = false;
            out_.push_back(PortPhaseChanged{id, PortPhase::ClosingBackoff, PortPhase::Closing});
        }
        if (port.phase == PortPhase::Enabled) return;

        if (port.awaiting_response) ++port.misses;
        port.awaiting_response = false;

        if (port.misses >= p_.loss_threshold) {
            if (port.phase == PortPhase::Closing) {
                ++port.attempt;
                closing_backoff(id, port);
            } else {
                drop_session(id, port);
            }
            return;
        }

        TransmitFrame frame{id, FrameKind::ProcessData, 0, {}, std::nullopt};
        switch (port.phase) {
        case PortPhase::Handshake: frame.kind = FrameKind::Handshake; break;
        case PortPhase::ParameterExchange:
            frame.kind = FrameKind::SafetyParameter;
            frame.key_material = port.session->key;
            break;
        case PortPhase::Cyclic:
            if (port.session && port.session->safety_armed) frame.payload = safety_payload(id, port);
            break;
        case PortPhase::Closing:
            if (!s_.holds_config_channel) {
                if (s_.config_channel_busy) {
                    closing_backoff(id, port);
                    return;
                }
                acquire_channel();
            }
            frame.kind = FrameKind::Closeout;
            frame.attempt = port.attempt;
            break;
        default: return;
        }
        port.awaiting_response = true;
        out_.push_back(ScheduleSelf{now_ + p_.w_cycle, CycleTimer{id, port.timer_generation}});
        out_.push_back(std::move(frame));
    }

    void on(const DeviceResponse& ev)
    {
        auto it = s_.ports.find(ev.identity);
        if (it == s_.ports.end()) return;
        const pdu::PairingIdentity id = ev.identity;
        Port& port = it->second;
        if (!port.awaiting_response || ev.kind != expected_kind(port.phase)) return;
        if (ev.kind == FrameKind::Closeout && ev.attempt != port.attempt) return;
        port.awaiting_response = false;
        port.misses = 0;

        switch (ev.kind) {
        case FrameKind::Handshake:
            if (++port.progress < p_.pairing_handshake_cycles) return;
            port.progress = 0;
            port.session = Session{pdu::SessionKey{}, now_, false};
            if (s_.safety_enabled) {
                port.session->key = random_key(rng_);
                set_phase(id, port, PortPhase::ParameterExchange);
            } else {
                set_phase(id, port, PortPhase::Cyclic);
            }
            return;
        case FrameKind::SafetyParameter:
            if (++port.progress < p_.safety_param_cycles) return;
            port.progress = 0;
            port.session->safety_armed = true;
            port.tx_counter = {pdu::control::kData, 0};
            port.rearm_pending = true;
            set_phase(id, port, PortPhase::Cyclic);
            return;
        case FrameKind::Closeout:
            if (++port.progress < p_.closeout_exchanges) return;
            out_.push_back(PortPhaseChanged{id, port.phase, std::nullopt});
            s_.ports.erase(it);
            return;
        case FrameKind::ProcessData: return;
        }
    }

    void on(const SmiCommand& ev)
    {
        auto before = s_.ports.find(ev.identity);
        std::optional<PortPhase> from;
        if (before != s_.ports.end()) from = before->second.phase;

        s_ = ev.op == SmiCommand::Op::Pair ? smi_pair(s_, ev.identity, ev.uid) : smi_unpair(s_, ev.identity, ev.mode);

        auto after = s_.ports.find(ev.identity);
        std::optional<PortPhase> to;
        if (after != s_.ports.end()) to = after->second.phase;
        if (from != to) out_.push_back(PortPhaseChanged{ev.identity, from, to});
    }

private:
    static FrameKind expected_kind(PortPhase phase)
    {
        switch (phase) {
        case PortPhase::Handshake: return FrameKind::Handshake;
        case PortPhase::ParameterExchange: return FrameKind::SafetyParameter;
        case PortPhase::Closing: return FrameKind::Closeout;
        default: return FrameKind::ProcessData;
        }
    }

    std::vector<std::uint8_t> safety_payload(pdu::PairingIdentity id, Port& port)
    {
        static constexpr std::array<std::uint8_t, 2> kOutputs{0x01, 0x00};
        pdu::ControlMCnt ctl = port.tx_counter;
        if (port.rearm_pending) ctl.control_bits |= pdu::control::kRearm;
        auto frame = pdu::encode_output_pdu(kOutputs, ctl, id, port.session->key);
        port.tx_counter = port.tx_counter.next();
        port.rearm_pending = false;
        return frame;
    }

    Duration backoff()
    {
        auto cycles = rng_.uniform_int(p_.backoff_min_cycles, p_.backoff_max_cycles);
        return p_.w_cycle * cycles;
    }

    void closing_backoff(pdu::PairingIdentity id, Port& port)
    {
        port.progress = 0;
        port.misses = 0;
        port.awaiting_response = false;
        set_phase(id, port, PortPhase::ClosingBackoff);
        if (s_.holds_config_channel) release_channel();
        out_.push_back(ScheduleSelf{now_ + backoff(), CycleTimer{id, port.timer_generation}});
    }

    void drop_session(pdu::PairingIdentity id, Port& port)
    {
        port.session.reset();
        port.progress = 0;
        port.misses = 0;
        port.awaiting_response = false;
        port.timer_generation = s_.next_timer_generation++;
        set_phase(id, port, PortPhase::Enabled);
    }

    void set_phase(pdu::PairingIdentity id, Port& port, PortPhase to)
    {
        if (port.phase == to) return;
        out_.push_back(PortPhaseChanged{id, port.phase, to});
        port.phase = to;
    }

    void acquire_channel()
    {
        if (s_.holds_config_channel) return;
        s_.holds_config_channel = true;
        out_.push_back(AcquireConfigChannel{});
    }

    void release_channel()
    {
        s_.holds_config_channel = false;
        out_.push_back(ReleaseConfigChannel{});
    }

    MasterState s_;
    std::vector<MasterAction> out_;
    SimTime now_;
    Rng& rng_;
    const ChannelView& channel_;
    const TimingProfile& p_;
};

} // namespace

MasterStep master_step(const MasterState& state, const MasterEvent& event, SimTime now, Rng& rng,
                       const ChannelView& channel, const TimingProfile& profile)
{
    MasterMachine m(state, now, rng, channel, profile);
    std::visit([&](const auto& ev) { m.on(ev); }, event);
    return m.finish();
}

// --- safety connection -----------------------------------------------------

SafetyEstablishment safety_connection_establish(Session session, const TimingProfile& profile, double per, Rng& rng,
                                                bool safety_mode)
{
    SafetyEstablishment result{session, Duration{0}, 0, false};
    if (!safety_mode) return result;

    pdu::SessionKey key = random_key(rng);
    unsigned done = 0;
    unsigned misses = 0;
    while (done < profile.safety_param_cycles) {
        result.elapsed += profile.w_cycle;
        if (radio::sample_frame_loss(exchange_loss(per, FrameKind::SafetyParameter, profile), rng)) {
            ++result.retries;
            if (++misses >= profile.loss_threshold) {
                result.aborted = true;
                return result;
            }
            continue;
        }
        misses = 0;
        ++done;
    }
    result.session.key = key;
    result.session.safety_armed = true;
    return result;
}

} // namespace iolws::stack
