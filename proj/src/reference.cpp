#include "iolws/reference.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "iolws/config.hpp"
#include "iolws/error.hpp"

namespace iolws::config {

namespace {

struct Reader {
    std::string_view source;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::ConfigError, std::string(source) + ": " + what);
    }

    double number(const YAML::Node& node, const char* key, const std::string& where) const
    {
        if (!node[key]) fail("missing '" + std::string(key) + "' in " + where);
        try {
            return node[key].as<double>();
        } catch (const YAML::Exception&) {
            fail("'" + std::string(key) + "' in " + where + " is not a number");
        }
    }

    metrics::ReferenceStats stats(const YAML::Node& node, const std::string& where) const
    {
        if (!node || !node.IsMap()) fail("missing statistics block " + where);
        return {number(node, "min", where), number(node, "max", where), number(node, "mean", where),
                number(node, "std", where)};
    }

    metrics::Tolerance tolerance(const YAML::Node& node, metrics::Tolerance fallback) const
    {
        if (!node) return fallback;
        auto pick = [&](const char* key, double& out) {
            if (node[key]) out = number(node, key, "tolerance");
            if (!(out > 0.0)) fail(std::string("tolerance '") + key + "' must be positive");
        };
        pick("min", fallback.min);
        pick("max", fallback.max);
        pick("mean", fallback.mean);
        pick("std", fallback.std);
        return fallback;
    }

    std::vector<metrics::ReferenceRow> rows(const YAML::Node& node, const char* name,
                                            const metrics::Tolerance& tol) const
    {
        if (!node || !node.IsSequence()) fail("missing table '" + std::string(name) + "'");
        std::vector<metrics::ReferenceRow> out;
        for (const auto& r : node) {
            std::string where = std::string(name) + " row " + std::to_string(out.size());
            metrics::ReferenceRow row;
            row.attenuation_db = number(r, "attenuation_db", where);
            row.rssi_dbm = number(r, "rssi_dbm", where);
            row.iolw = stats(r["iolw"], where + " iolw");
            row.iolws = stats(r["iolws"], where + " iolws");
            row.tolerance = tolerance(r["tolerance"], tol);
            out.push_back(row);
        }
        return out;
    }
};

} // namespace

std::optional<metrics::ReferenceRow> ReferenceTables::connect_row(double attenuation_db) const
{
    for (const auto& r : connect)
        if (r.attenuation_db == attenuation_db) return r;
    return std::nullopt;
}

std::vector<sim::CalibrationRow> ReferenceTables::calibration_rows() const
{
    std::vector<sim::CalibrationRow> out;
    for (const auto& r : connect) out.push_back({r.attenuation_db, r.rssi_dbm, r.iolw.mean});
    return out;
}

ReferenceTables parse_reference(std::string_view yaml, std::string_view source)
{
    Reader rd{source};
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        rd.fail(std::string("YAML syntax error: ") + e.what());
    }
    if (!root.IsMap()) rd.fail("top level must be a mapping");

    ReferenceTables t;
    metrics::Tolerance tol = rd.tolerance(root["tolerance"], metrics::Tolerance{});
    t.connect = rd.rows(root["connect"], "connect", tol);
    t.handover_printed = rd.rows(root["handover_printed"], "handover_printed", tol);

    if (auto h = root["handover_targets"]) {
        t.handover.surplus_s = rd.number(h, "surplus_s", "handover_targets");
        t.handover.surplus_tolerance_s = rd.number(h, "surplus_tolerance_s", "handover_targets");
        t.handover.outlier_s = rd.number(h, "outlier_s", "handover_targets");
        t.handover.max_limit_s = rd.number(h, "max_limit_s", "handover_targets");
        t.handover.max_attenuation_db = rd.number(h, "max_attenuation_db", "handover_targets");
    }
    if (auto q = root["quantile_points"]) {
        for (const auto& n : q) {
            QuantilePoint p;
            std::string where = "quantile_points[" + std::to_string(t.quantile_points.size()) + "]";
            try {
                p.kind = parse_kind(n["kind"].as<std::string>());
            } catch (const std::exception&) {
                rd.fail("bad 'kind' in " + where);
            }
            p.attenuation_db = rd.number(n, "attenuation_db", where);
            p.rssi_dbm = rd.number(n, "rssi_dbm", where);
            p.p = rd.number(n, "p", where);
            p.reference_s = rd.number(n, "reference_s", where);
            p.limit_s = rd.number(n, "limit_s", where);
            if (!(p.p > 0.0 && p.p <= 1.0)) rd.fail("probability out of (0, 1] in " + where);
            t.quantile_points.push_back(p);
        }
    }
    return t;
}

ReferenceTables load_reference(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot open reference file " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_reference(buf.str(), path.string());
}

std::filesystem::path default_reference_path()
{
    return std::filesystem::path(IOLWS_SOURCE_DIR) / "data" / "reference_tables.yaml";
}

} // namespace iolws::config
