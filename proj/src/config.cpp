#include "iolws/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "iolws/error.hpp"

namespace iolws::config {

namespace {

[[noreturn]] void fail(std::string_view source, const std::string& what)
{
    throw Error(ErrorCode::ConfigError, std::string(source) + ": " + what);
}

class Section {
public:
    Section(const YAML::Node& node, std::string name, std::string_view source)
        : node_(node), name_(std::move(name)), source_(source)
    {
        if (node_ && !node_.IsMap()) fail(source_, "section '" + name_ + "' must be a mapping");
    }

    // Rejects keys that no get() asked for.
    void finish() const
    {
        if (!node_) return;
        for (const auto& kv : node_) {
            auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) fail(source_, "unknown key '" + name_ + "." + key + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        if (!node_ || !node_[key]) return;
        try {
            out = node_[key].as<T>();
        } catch (const YAML::Exception&) {
            fail(source_, "bad value for '" + name_ + "." + key + "'");
        }
    }

    void get_ms(const char* key, stack::Duration& out)
    {
        double ms = static_cast<double>(out.count()) / 1000.0;
        get(key, ms);
        double us = ms * 1000.0;
        if (!std::isfinite(us) || us < 0.0 || std::abs(us - std::round(us)) > 1e-6)
            fail(source_, "'" + name_ + "." + key + "' must be a non-negative whole number of microseconds");
        out = stack::Duration{std::llround(us)};
    }

    template <typename Enum>
    void get_keyword(const char* key, Enum& out, Enum (*parse)(std::string_view))
    {
        std::string text;
        get(key, text);
        if (!text.empty()) {
            try {
                out = parse(text);
            } catch (const Error& e) {
                fail(source_, "'" + name_ + "." + key + "': " + e.what());
            }
        }
    }

private:
    YAML::Node node_;
    std::string name_;
    std::string_view source_;
    std::set<std::string> seen_;
};

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string ms(stack::Duration d)
{
    return num(static_cast<double>(d.count()) / 1000.0);
}

} // namespace

sim::ScenarioKind parse_kind(std::string_view text)
{
    if (text == "connect" || text == "roaming_connect") return sim::ScenarioKind::RoamingConnect;
    if (text == "handover") return sim::ScenarioKind::Handover;
    throw Error(ErrorCode::ConfigError, "unknown scenario kind '" + std::string(text) + "' (connect | handover)");
}

sim::HandoverOrder parse_order(std::string_view text)
{
    if (text == "simultaneous") return sim::HandoverOrder::Simultaneous;
    if (text == "sequential") return sim::HandoverOrder::Sequential;
    throw Error(ErrorCode::ConfigError,
                "unknown handover order '" + std::string(text) + "' (simultaneous | sequential)");
}

sim::HandoverStart parse_start(std::string_view text)
{
    if (text == "last_delivered") return sim::HandoverStart::LastDeliveredCycle;
    if (text == "detection") return sim::HandoverStart::LossDetection;
    throw Error(ErrorCode::ConfigError,
                "unknown handover start '" + std::string(text) + "' (last_delivered | detection)");
}

stack::JitterShape parse_jitter_shape(std::string_view text)
{
    if (text == "uniform") return stack::JitterShape::Uniform;
    if (text == "triangular") return stack::JitterShape::Triangular;
    throw Error(ErrorCode::ConfigError, "unknown jitter shape '" + std::string(text) + "' (uniform | triangular)");
}

AppConfig parse_config(std::string_view yaml, std::string_view source)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        fail(source, std::string("YAML syntax error: ") + e.what());
    }
    if (root.IsNull()) return {};
    if (!root.IsMap()) fail(source, "top level must be a mapping of sections");

    static const std::set<std::string> known{"scenario", "profile", "rssi_map", "per_curve", "link_budget", "handover"};
    for (const auto& kv : root) {
        auto key = kv.first.as<std::string>();
        if (!known.count(key)) fail(source, "unknown section '" + key + "'");
    }

    AppConfig cfg;
    auto& sc = cfg.scenario;
    {
        Section s(root["scenario"], "scenario", source);
        s.get_keyword("kind", sc.kind, &parse_kind);
        s.get("safety", sc.safety);
        s.get("attenuation_on_db", sc.attenuation_on_db);
        s.get("attenuation_off_db", sc.attenuation_off_db);
        s.get_ms("on_duration_ms", sc.on_duration);
        s.get_ms("off_duration_ms", sc.off_duration);
        s.get("repetitions", sc.repetitions);
        s.get("seed", sc.seed);
        s.get("max_carry_cycles", sc.max_carry_cycles);
        s.finish();
    }
    {
        auto& p = sc.profile;
        Section s(root["profile"], "profile", source);
        s.get_ms("w_cycle_ms", p.w_cycle);
        s.get_ms("scan_dwell_ms", p.scan_dwell);
        s.get("pairing_handshake_cycles", p.pairing_handshake_cycles);
        s.get_ms("base_connect_floor_ms", p.base_connect_floor);
        s.get_ms("phase_jitter_max_ms", p.phase_jitter_max);
        s.get_keyword("jitter_shape", p.jitter_shape, &parse_jitter_shape);
        s.get("safety_param_cycles", p.safety_param_cycles);
        s.get("cycle_transmissions", p.cycle_transmissions);
        s.get("loss_threshold", p.loss_threshold);
        s.get("closeout_exchanges", p.closeout_exchanges);
        s.get("backoff_min_cycles", p.backoff_min_cycles);
        s.get("backoff_max_cycles", p.backoff_max_cycles);
        s.finish();
    }
    if (auto node = root["rssi_map"]) {
        if (!node.IsSequence()) fail(source, "rssi_map must be a list of [attenuation_db, rssi_dbm] pairs");
        std::vector<radio::RssiAnchor> anchors;
        for (const auto& pair : node) {
            if (!pair.IsSequence() || pair.size() != 2) fail(source, "rssi_map entries must be [attenuation_db, rssi_dbm]");
            try {
                anchors.push_back({pair[0].as<double>(), pair[1].as<double>()});
            } catch (const YAML::Exception&) {
                fail(source, "rssi_map entries must be numbers");
            }
        }
        try {
            sc.rssi_map = radio::RssiMap(std::move(anchors));
        } catch (const Error& e) {
            fail(source, e.what());
        }
    }
    {
        Section s(root["per_curve"], "per_curve", source);
        s.get("rssi_mid_dbm", sc.per_curve.rssi_mid);
        s.get("slope_per_db", sc.per_curve.slope);
        s.get("floor", sc.per_curve.floor);
        s.finish();
    }
    {
        Section s(root["link_budget"], "link_budget", source);
        s.get("master_tx_power_dbm", cfg.link_budget.master_tx_power_dbm);
        s.get("device_tx_power_dbm", cfg.link_budget.device_tx_power_dbm);
        s.get("off_attenuation_db", cfg.link_budget.off_attenuation_db);
        s.finish();
    }
    {
        auto& h = sc.handover;
        Section s(root["handover"], "handover", source);
        s.get_keyword("order", h.order, &parse_order);
        s.get_keyword("start", h.start, &parse_start);
        s.get("contention", h.contention);
        s.get_ms("window_ms", h.window);
        s.finish();
    }

    try {
        sc.validate();
    } catch (const Error& e) {
        fail(source, e.what());
    }
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string render_config(const AppConfig& cfg)
{
    const auto& sc = cfg.scenario;
    const auto& p = sc.profile;
    std::ostringstream out;
    out << "scenario:\n"
        << "  kind: " << (sc.kind == sim::ScenarioKind::RoamingConnect ? "connect" : "handover") << '\n'
        << "  safety: " << (sc.safety ? "true" : "false") << '\n'
        << "  attenuation_on_db: " << num(sc.attenuation_on_db) << '\n'
        << "  attenuation_off_db: " << num(sc.attenuation_off_db) << '\n'
        << "  on_duration_ms: " << ms(sc.on_duration) << '\n'
        << "  off_duration_ms: " << ms(sc.off_duration) << '\n'
        << "  repetitions: " << sc.repetitions << '\n'
        << "  seed: " << sc.seed << '\n'
        << "  max_carry_cycles: " << sc.max_carry_cycles << "\n\n"
        << "profile:\n"
        << "  w_cycle_ms: " << ms(p.w_cycle) << '\n'
        << "  scan_dwell_ms: " << ms(p.scan_dwell) << '\n'
        << "  pairing_handshake_cycles: " << p.pairing_handshake_cycles << '\n'
        << "  base_connect_floor_ms: " << ms(p.base_connect_floor) << '\n'
        << "  phase_jitter_max_ms: " << ms(p.phase_jitter_max) << '\n'
        << "  jitter_shape: " << (p.jitter_shape == stack::JitterShape::Uniform ? "uniform" : "triangular") << '\n'
        << "  safety_param_cycles: " << p.safety_param_cycles << '\n'
        << "  cycle_transmissions: " << p.cycle_transmissions << '\n'
        << "  loss_threshold: " << p.loss_threshold << '\n'
        << "  closeout_exchanges: " << p.closeout_exchanges << '\n'
        << "  backoff_min_cycles: " << p.backoff_min_cycles << '\n'
        << "  backoff_max_cycles: " << p.backoff_max_cycles << "\n\n"
        << "rssi_map:\n";
    for (const auto& a : sc.rssi_map.anchors()) out << "  - [" << num(a.attenuation_db) << ", " << num(a.rssi_dbm) << "]\n";
    out << "\nper_curve:\n"
        << "  rssi_mid_dbm: " << num(sc.per_curve.rssi_mid) << '\n'
        << "  slope_per_db: " << num(sc.per_curve.slope) << '\n'
        << "  floor: " << num(sc.per_curve.floor) << "\n\n"
        << "link_budget:\n"
        << "  master_tx_power_dbm: " << num(cfg.link_budget.master_tx_power_dbm) << '\n'
        << "  device_tx_power_dbm: " << num(cfg.link_budget.device_tx_power_dbm) << '\n'
        << "  off_attenuation_db: " << num(cfg.link_budget.off_attenuation_db) << "\n\n"
        << "handover:\n"
        << "  order: " << sim::to_string(sc.handover.order) << '\n'
        << "  start: " << sim::to_string(sc.handover.start) << '\n'
        << "  contention: " << (sc.handover.contention ? "true" : "false") << '\n'
        << "  window_ms: " << ms(sc.handover.window) << '\n';
    return out.str();
}

std::filesystem::path default_config_path()
{
    return std::filesystem::path(IOLWS_SOURCE_DIR) / "config" / "default.yaml";
}

} // namespace iolws::config
