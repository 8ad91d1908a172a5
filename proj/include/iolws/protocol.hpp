#pragma once

// FS-W-Master and FS-W-Device state machines.
//
// Both machines are pure transition functions: a step takes the current
// state, one event, the current simulated time, the run's RNG and a view of
// the radio channel, and returns the next state plus the actions to be
// carried out by the event loop. Frame loss is drawn once per exchange on the
// device side (downlink and uplink share one loss probability); the master
// observes a lost exchange as a missing response at its next cycle.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "iolws/rng.hpp"
#include "iolws/safety_pdu.hpp"

namespace iolws::stack {

using SimTime = std::chrono::microseconds;
using Duration = std::chrono::microseconds;
using MasterId = std::uint8_t;
using DeviceUid = std::uint32_t;

inline constexpr DeviceUid kDefaultDeviceUid = 0x1001;

enum class JitterShape { Uniform, Triangular };

/// Protocol timing. The connect floor decomposes as
/// scan_dwell + pairing_handshake_cycles * w_cycle; the phase jitter equals
/// the beacon interval of a roaming master.
struct TimingProfile {
    Duration w_cycle{5'000};
    Duration scan_dwell{389'000};
    unsigned pairing_handshake_cycles = 8;
    Duration base_connect_floor{429'000};
    Duration phase_jitter_max{58'000};
    JitterShape jitter_shape = JitterShape::Uniform;
    unsigned safety_param_cycles = 5;
    /// Transmissions per W-cycle for process data (retries inside the cycle).
    /// Pairing and close-out frames are sent once.
    unsigned cycle_transmissions = 3;
    unsigned loss_threshold = 3;
    unsigned closeout_exchanges = 24;
    unsigned backoff_min_cycles = 1;
    unsigned backoff_max_cycles = 4;

    Duration beacon_interval() const noexcept { return phase_jitter_max; }
    Duration safety_offset() const noexcept { return w_cycle * safety_param_cycles; }

    // Throws Error(InvalidParameter) on inconsistent values.
    void validate() const;
};

struct Session {
    pdu::SessionKey key;
    SimTime established_at{0};
    bool safety_armed = false;
};

enum class DevicePhase { Unpaired, Scanning, Pairing, Connected, SafetyParamExchange, SafetyOperational, Lost };

std::string_view to_string(DevicePhase phase) noexcept;

inline bool is_operational(DevicePhase p) noexcept
{
    return p == DevicePhase::Connected || p == DevicePhase::SafetyParamExchange || p == DevicePhase::SafetyOperational;
}

enum class FrameKind { Handshake, ProcessData, SafetyParameter, Closeout };

std::string_view to_string(FrameKind kind) noexcept;

// Loss probability of one exchange of `kind` given the per-frame loss.
double exchange_loss(double per, FrameKind kind, const TimingProfile& profile);

enum class TimerKind { AckTimeout, Supervision };

/// What the state machines need to know about the medium.
class ChannelView {
public:
    virtual ~ChannelView() = default;
    virtual double loss_probability(MasterId master) const = 0;
    virtual double rssi_dbm(MasterId master) const = 0;
    /// Master currently holding the shared configuration channel, if any.
    virtual std::optional<MasterId> config_channel_owner() const { return std::nullopt; }
};

/// Same loss probability on every link; handy for tests.
class FixedChannel final : public ChannelView {
public:
    explicit FixedChannel(double per, double rssi = -50.0) : per_(per), rssi_(rssi) {}
    double loss_probability(MasterId) const override { return per_; }
    double rssi_dbm(MasterId) const override { return rssi_; }
    std::optional<MasterId> config_channel_owner() const override { return owner_; }
    void set_owner(std::optional<MasterId> owner) { owner_ = owner; }

private:
    double per_;
    double rssi_;
    std::optional<MasterId> owner_;
};

// --- device ----------------------------------------------------------------

struct BeaconReceived {
    MasterId master = 0;
    double rssi_dbm = 0.0;
    std::vector<DeviceUid> advertised;
};

/// One W-cycle frame exchange slot addressed to the device.
struct CycleTick {
    MasterId master = 0;
    FrameKind kind = FrameKind::ProcessData;
    std::uint32_t attempt = 0;                ///< close-out attempt number
    std::vector<std::uint8_t> payload;        ///< encoded safety PDU, if any
    std::optional<pdu::SessionKey> key_material; ///< carried by parameter frames
};

struct PairingAck {
    MasterId master = 0;
};

struct PairingRejected {
    MasterId master = 0;
    bool collision = false;
};

struct Timeout {
    TimerKind kind = TimerKind::Supervision;
    std::uint32_t generation = 0;
};

using DeviceEvent = std::variant<std::monostate, BeaconReceived, CycleTick, PairingAck, PairingRejected, Timeout>;

std::string_view event_name(const DeviceEvent& event) noexcept;

struct SendPairingRequest {
    MasterId master = 0;
    DeviceUid uid = 0;
    pdu::PairingIdentity identity;
};

struct SendResponse {
    MasterId master = 0;
    FrameKind kind = FrameKind::ProcessData;
    std::uint32_t attempt = 0;
};

struct StartTimer {
    TimerKind kind = TimerKind::Supervision;
    SimTime at{0};
    std::uint32_t generation = 0;
};

struct PhaseChanged {
    DevicePhase from = DevicePhase::Unpaired;
    DevicePhase to = DevicePhase::Unpaired;
};

struct ConnectionLost {
    MasterId master = 0;
    SimTime at{0};
};

struct Released {
    MasterId master = 0;
};

using DeviceAction = std::variant<SendPairingRequest, SendResponse, StartTimer, PhaseChanged, ConnectionLost, Released>;

struct DeviceState {
    DeviceUid uid = kDefaultDeviceUid;
    pdu::PairingIdentity identity{1, 0};
    DevicePhase phase = DevicePhase::Unpaired;
    std::optional<MasterId> current_master;
    unsigned missed_cycles = 0;
    std::optional<std::uint16_t> last_accepted_mcnt;
    bool safety_enabled = false;
    /// When set, a lost session is only given up through the master's
    /// close-out; the device waits in LOST instead of rescanning.
    bool coordinated_release = false;
    unsigned progress = 0; ///< successful exchanges in the current procedure
    std::uint32_t closeout_attempt = 0;
    std::optional<Session> session;
    std::optional<pdu::SessionKey> pending_key;
    bool awaiting_ack = false;
    std::uint32_t timer_generation = 0;
};

template <typename State, typename Action>
struct StepResult {
    State state;
    std::vector<Action> actions;
};

using DeviceStep = StepResult<DeviceState, DeviceAction>;

// Throws Error(ProtocolViolation) for events that cannot occur in the
// current phase (e.g. a pairing ack while scanning, process data from a
// master the device is not attached to).
DeviceStep device_step(const DeviceState& state, const DeviceEvent& event, SimTime now, Rng& rng,
                       const ChannelView& channel, const TimingProfile& profile);

/// Device already attached to `master` with an established session, as at
/// the start of a measurement cycle.
DeviceState attached_device(DeviceState base, MasterId master, const Session& session);

// --- master ----------------------------------------------------------------

enum class TrackMode { Cyclic, Roaming };
enum class PortMode { Deactivated, Cyclic, Roaming, RoamingAutoPairing };
enum class PortPhase { Enabled, Handshake, ParameterExchange, Cyclic, Closing, ClosingBackoff };
enum class UnpairMode { Abrupt, Closeout };

std::string_view to_string(PortPhase phase) noexcept;

struct Port {
    DeviceUid uid = kDefaultDeviceUid;
    PortPhase phase = PortPhase::Enabled;
    unsigned progress = 0;
    unsigned misses = 0;
    bool awaiting_response = false;
    std::uint32_t attempt = 0;
    std::uint32_t timer_generation = 0;
    std::optional<Session> session;
    pdu::ControlMCnt tx_counter{pdu::control::kData, 0};
    bool rearm_pending = false;
};

struct MasterState {
    MasterId id = 1;
    TrackMode track_mode = TrackMode::Roaming;
    PortMode port_mode = PortMode::RoamingAutoPairing;
    bool safety_enabled = false;
    std::map<pdu::PairingIdentity, Port> ports; ///< SMI-enabled or active ports
    bool config_channel_busy = false;           ///< another master holds the config channel
    bool holds_config_channel = false;
    std::uint32_t next_timer_generation = 1;

    bool advertises(DeviceUid uid) const;
    std::vector<DeviceUid> advertised() const;
};

struct BeaconTimer {
    bool retry = false;
};

struct PairingRequest {
    DeviceUid uid = 0;
    pdu::PairingIdentity identity;
};

struct CycleTimer {
    pdu::PairingIdentity identity;
    std::uint32_t generation = 0;
};

struct DeviceResponse {
    pdu::PairingIdentity identity;
    FrameKind kind = FrameKind::ProcessData;
    std::uint32_t attempt = 0;
};

struct SmiCommand {
    enum class Op { Pair, Unpair };
    Op op = Op::Pair;
    DeviceUid uid = kDefaultDeviceUid;
    pdu::PairingIdentity identity;
    UnpairMode mode = UnpairMode::Abrupt;
};

using MasterEvent = std::variant<std::monostate, BeaconTimer, PairingRequest, CycleTimer, DeviceResponse, SmiCommand>;

std::string_view event_name(const MasterEvent& event) noexcept;

struct TransmitBeacon {
    std::vector<DeviceUid> advertised;
};

struct TransmitFrame {
    pdu::PairingIdentity identity;
    FrameKind kind = FrameKind::ProcessData;
    std::uint32_t attempt = 0;
    std::vector<std::uint8_t> payload;
    std::optional<pdu::SessionKey> key_material;
};

struct SendPairingAck {
    DeviceUid uid = 0;
};

struct SendPairingRejected {
    DeviceUid uid = 0;
    bool collision = false;
};

struct ScheduleSelf {
    SimTime at{0};
    MasterEvent event;
};

struct AcquireConfigChannel {};
struct ReleaseConfigChannel {};

struct PortPhaseChanged {
    pdu::PairingIdentity identity;
    std::optional<PortPhase> from; ///< nullopt: port did not exist
    std::optional<PortPhase> to;   ///< nullopt: port removed
};

using MasterAction = std::variant<TransmitBeacon, TransmitFrame, SendPairingAck, SendPairingRejected, ScheduleSelf,
                                  AcquireConfigChannel, ReleaseConfigChannel, PortPhaseChanged>;

using MasterStep = StepResult<MasterState, MasterAction>;

MasterStep master_step(const MasterState& state, const MasterEvent& event, SimTime now, Rng& rng,
                       const ChannelView& channel, const TimingProfile& profile);

// Enables `identity` for pairing with device `uid`. Enabling an already
// enabled or paired device is a no-op; a port held by another device throws
// Error(SlotOccupied).
MasterState smi_pair(const MasterState& master, pdu::PairingIdentity identity, DeviceUid uid = kDefaultDeviceUid);

// Abrupt: the session is dropped immediately and the device notices missing
// cycles. Closeout: the master runs the close-out procedure on its next
// cycles before the port is freed. Throws Error(UnknownDevice) for ports
// that are neither enabled nor paired.
MasterState smi_unpair(const MasterState& master, pdu::PairingIdentity identity,
                       UnpairMode mode = UnpairMode::Abrupt);

/// Master whose port for `identity` is already in cyclic exchange.
MasterState attached_master(MasterState base, pdu::PairingIdentity identity, DeviceUid uid, const Session& session);

// --- safety connection -----------------------------------------------------

struct SafetyEstablishment {
    Session session;
    Duration elapsed{0};
    unsigned retries = 0;
    bool aborted = false; ///< connection dropped mid-exchange
};

// Parameter exchange over process data once the IOLW connection is up:
// safety_param_cycles exchanges, a lost exchange is repeated in the next cycle,
// loss_threshold consecutive losses abort. Key material is drawn from `rng`
// first (two 64-bit words), then one loss draw per cycle.
SafetyEstablishment safety_connection_establish(Session session, const TimingProfile& profile, double per, Rng& rng,
                                                bool safety_mode = true);

pdu::SessionKey random_key(Rng& rng);

} // namespace iolws::stack
