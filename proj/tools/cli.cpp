#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <thread>
#include <tuple>

#include "iolws/calibration.hpp"
#include "iolws/config.hpp"
#include "iolws/digest.hpp"
#include "iolws/error.hpp"
#include "iolws/metrics.hpp"
#include "iolws/reference.hpp"
#include "iolws/scenario.hpp"
#include "iolws/version.hpp"

namespace iolws::cli {

namespace fs = std::filesystem;
using config::AppConfig;
using metrics::Mode;

namespace {

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string atten_label(double db)
{
    return fmt("%g", db);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

fs::path resolve_out_dir(const std::optional<std::string>& flag)
{
    if (flag) return *flag;
    if (const char* env = std::getenv("IOLWS_OUTPUT_DIR"); env && *env) return env;
    return "iolws-out";
}

/// Flags shared by run, sweep and calibrate; set ones override the file.
struct Overrides {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> kind;
    std::optional<bool> safety;
    std::optional<double> atten_db;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> repetitions;
    std::optional<unsigned> max_carry;
    std::optional<std::string> order;
    std::optional<std::string> start;
    std::optional<bool> contention;

    void attach(CLI::App* app, bool with_atten, bool with_kind)
    {
        app->add_option("--config", config_path, "configuration file (YAML)");
        app->add_option("--out", out_dir, "output directory (default $IOLWS_OUTPUT_DIR or ./iolws-out)");
        if (with_kind) app->add_option("--kind", kind, "connect | handover");
        if (with_atten) {
            app->add_option("--safety", safety, "true: IOLWS, false: IOLW");
            app->add_option("--atten-db", atten_db, "attenuation in the ON state");
        }
        app->add_option("--seed", seed, "master seed");
        app->add_option("--reps", repetitions, "valid repetitions per scenario");
        app->add_option("--max-carry", max_carry, "further ON windows a connect attempt may use");
        app->add_option("--handover-order", order, "simultaneous | sequential");
        app->add_option("--handover-start", start, "last_delivered | detection");
        app->add_option("--contention", contention, "false: abrupt unpair without close-out");
    }

    AppConfig load() const
    {
        AppConfig cfg = config::load_config(config_path.empty() ? config::default_config_path() : fs::path(config_path));
        auto& sc = cfg.scenario;
        if (kind) sc.kind = config::parse_kind(*kind);
        if (safety) sc.safety = *safety;
        if (atten_db) sc.attenuation_on_db = *atten_db;
        if (seed) sc.seed = *seed;
        if (repetitions) sc.repetitions = *repetitions;
        if (max_carry) sc.max_carry_cycles = *max_carry;
        if (order) sc.handover.order = config::parse_order(*order);
        if (start) sc.handover.start = config::parse_start(*start);
        if (contention) sc.handover.contention = *contention;
        sc.validate();
        return cfg;
    }
};

std::string summary_text(const AppConfig& cfg, const sim::DurationSeries& series)
{
    const auto& sc = cfg.scenario;
    auto stats = metrics::summarize(series);
    metrics::Ecdf ecdf(series);
    double rssi = radio::rssi_from_attenuation(sc.attenuation_on_db, sc.rssi_map);
    std::ostringstream out;
    out << sim::artifact_header(series.seed, series.scenario_digest)
        << "kind=" << sim::to_string(sc.kind) << '\n'
        << "mode=" << (sc.safety ? "iolws" : "iolw") << '\n'
        << "attenuation_db=" << atten_label(sc.attenuation_on_db) << '\n'
        << "rssi_dbm=" << fmt("%.1f", rssi) << '\n'
        << "per=" << fmt("%.6g", radio::per_from_rssi(rssi, sc.per_curve)) << '\n'
        << "fspl_distance_m="
        << (sc.attenuation_on_db > 0.0 ? fmt("%.1f", radio::fspl_distance(sc.attenuation_on_db)) : "0") << '\n'
        << "repetitions=" << series.samples.size() << '\n'
        << "discarded=" << series.discarded << '\n'
        << "simulated_span_s=" << fmt("%.4f", static_cast<double>(series.simulated_span.count()) / 1e6) << '\n'
        << "min_s=" << fmt("%.4f", stats.min) << '\n'
        << "max_s=" << fmt("%.4f", stats.max) << '\n'
        << "mean_s=" << fmt("%.6f", stats.mean) << '\n'
        << "std_s=" << fmt("%.6f", stats.std) << '\n'
        << "q50_s=" << fmt("%.4f", ecdf.quantile(0.5)) << '\n'
        << "q99_s=" << fmt("%.4f", ecdf.quantile(0.99)) << '\n';
    return out.str();
}

void write_artifacts(const fs::path& dir, const AppConfig& cfg, const sim::DurationSeries& series)
{
    fs::create_directories(dir);
    sim::write_durations_csv(dir / "durations.csv", series);
    metrics::export_ecdf_csv(dir / "ecdf.csv", metrics::Ecdf(series), series.seed, series.scenario_digest);
    write_text(dir / "summary.txt", summary_text(cfg, series));
    write_text(dir / "config.yaml", config::render_config(cfg));
}

std::string series_dir_name(sim::ScenarioKind kind, double atten_db, bool safety)
{
    return std::string(kind == sim::ScenarioKind::RoamingConnect ? "connect" : "handover") + "_" +
           atten_label(atten_db) + "dB_" + (safety ? "iolws" : "iolw");
}

// --- subcommands --------------------------------------------------------------

int cmd_run(const Overrides& o, std::ostream& out)
{
    AppConfig cfg = o.load();
    auto series = sim::run_scenario(cfg.scenario);
    fs::path dir = resolve_out_dir(o.out_dir);
    write_artifacts(dir, cfg, series);
    out << summary_text(cfg, series) << "artifacts: " << dir.string() << '\n';
    return kOk;
}

struct SweepFlags {
    std::vector<std::string> attenuations;
    std::vector<std::string> modes{"iolw", "iolws"};
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

int cmd_sweep(const Overrides& o, const SweepFlags& f, bool atten_given, std::ostream& out, std::ostream& err)
{
    AppConfig base = o.load();
    const bool connect = base.scenario.kind == sim::ScenarioKind::RoamingConnect;
    std::vector<double> attens;
    for (const auto& text : f.attenuations) {
        if (text.empty()) continue;
        try {
            std::size_t used = 0;
            attens.push_back(std::stod(text, &used));
            if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidParameter, "not an attenuation: '" + text + "'");
        }
    }
    if (!atten_given)
        attens = connect ? std::vector<double>{30, 50, 65, 80, 83, 85} : std::vector<double>{30, 50, 65, 77, 80};
    if (attens.empty()) throw Error(ErrorCode::InvalidParameter, "attenuation list is empty");
    std::vector<bool> modes;
    for (const auto& m : f.modes) {
        if (m == "iolw") modes.push_back(false);
        else if (m == "iolws") modes.push_back(true);
        else throw Error(ErrorCode::InvalidParameter, "unknown mode '" + m + "' (iolw | iolws)");
    }
    if (modes.empty()) throw Error(ErrorCode::InvalidParameter, "mode list is empty");

    std::vector<AppConfig> cfgs;
    for (double a : attens)
        for (bool safety : modes) {
            AppConfig c = base;
            c.scenario.attenuation_on_db = a;
            c.scenario.safety = safety;
            c.scenario.validate();
            cfgs.push_back(c);
        }
    std::vector<sim::ScenarioConfig> scenarios;
    for (const auto& c : cfgs) scenarios.push_back(c.scenario);
    auto outcomes = sim::run_sweep_outcomes(scenarios, f.threads);

    fs::path root = resolve_out_dir(o.out_dir);
    fs::create_directories(root);
    std::map<double, std::map<bool, metrics::SummaryStats>> table;
    std::string digests;
    std::exception_ptr failure;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        if (outcomes[i].error) {
            failure = outcomes[i].error;
            break;
        }
        const auto& sc = cfgs[i].scenario;
        write_artifacts(root / series_dir_name(sc.kind, sc.attenuation_on_db, sc.safety), cfgs[i], *outcomes[i].series);
        table[sc.attenuation_on_db][sc.safety] = metrics::summarize(*outcomes[i].series);
        digests += outcomes[i].series->scenario_digest;
    }

    std::string csv = sim::artifact_header(base.scenario.seed, short_digest(digests));
    csv += "attenuation_db,rssi_dbm,min_iolw_s,min_iolws_s,max_iolw_s,max_iolws_s,mean_iolw_s,mean_iolws_s,std_iolw_s,"
           "std_iolws_s\n";
    auto cell = [](const std::map<bool, metrics::SummaryStats>& row, bool safety, double metrics::SummaryStats::*field,
                   const char* f) { return row.count(safety) ? fmt(f, row.at(safety).*field) : std::string(); };
    out << "atten  rssi    mean_iolw  mean_iolws  std_iolw  std_iolws  min_iolw  max_iolw\n";
    for (double a : attens) {
        if (!table.count(a)) continue;
        const auto& row = table[a];
        double rssi = radio::rssi_from_attenuation(a, base.scenario.rssi_map);
        csv += atten_label(a) + "," + fmt("%g", rssi);
        using S = metrics::SummaryStats;
        for (auto [field, f] : {std::pair{&S::min, "%.4f"}, {&S::max, "%.4f"}, {&S::mean, "%.6f"}, {&S::std, "%.6f"}})
            csv += "," + cell(row, false, field, f) + "," + cell(row, true, field, f);
        csv += '\n';
        char line[160];
        std::snprintf(line, sizeof line, "%5s  %5.1f  %9s  %10s  %8s  %9s  %8s  %8s\n", atten_label(a).c_str(), rssi,
                      cell(row, false, &S::mean, "%.4f").c_str(), cell(row, true, &S::mean, "%.4f").c_str(),
                      cell(row, false, &S::std, "%.4f").c_str(), cell(row, true, &S::std, "%.4f").c_str(),
                      cell(row, false, &S::min, "%.4f").c_str(), cell(row, false, &S::max, "%.4f").c_str());
        out << line;
    }
    write_text(root / "table.csv", csv);
    out << "artifacts: " << root.string() << '\n';
    if (failure) {
        err << "sweep aborted; results before the failing scenario are kept\n";
        std::rethrow_exception(failure);
    }
    return kOk;
}

struct CalibrateFlags {
    std::string reference;
    unsigned budget = sim::CalibrationOptions{}.budget;
    std::optional<std::string> config_out;
};

int cmd_calibrate(const Overrides& o, const CalibrateFlags& f, std::ostream& out, std::ostream& err)
{
    AppConfig cfg = o.load();
    auto ref = config::load_reference(f.reference.empty() ? config::default_reference_path() : fs::path(f.reference));
    sim::ScenarioConfig base = cfg.scenario;
    base.kind = sim::ScenarioKind::RoamingConnect;
    base.safety = false;
    sim::CalibrationOptions options;
    options.budget = f.budget;
    auto result = sim::fit_per_curve(ref.calibration_rows(), sim::scenario_runner(base), options);

    out << "atten  rssi    reference  simulated  rel_error\n";
    for (const auto& r : result.residuals) {
        char line[128];
        std::snprintf(line, sizeof line, "%5s  %5.1f  %9.3f  %9s  %9s\n", atten_label(r.attenuation_db).c_str(),
                      r.rssi_dbm, r.reference_s, r.simulated_s ? fmt("%.4f", *r.simulated_s).c_str() : "infeasible",
                      r.simulated_s ? fmt("%+.2f%%", 100.0 * r.rel_error).c_str() : "-");
        out << line;
    }
    out << "rssi_mid_dbm=" << fmt("%.6g", result.curve.rssi_mid) << " slope_per_db=" << fmt("%.6g", result.curve.slope)
        << " floor=" << fmt("%.6g", result.curve.floor) << " objective=" << fmt("%.6g", result.objective)
        << " iterations=" << result.iterations << " evaluations=" << result.evaluations << '\n';
    if (result.diverged(options)) {
        err << to_string(ErrorCode::CalibrationDiverged) << ": a row at or above " << options.moderate_rssi_dbm
            << " dBm misses its reference by more than " << 100.0 * options.diverged_rel_error << " %\n";
        return kCalibration;
    }
    cfg.scenario.per_curve = result.curve;
    fs::path target = f.config_out ? fs::path(*f.config_out) : resolve_out_dir(o.out_dir) / "calibrated.yaml";
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_text(target, config::render_config(cfg));
    out << "wrote " << target.string() << '\n';
    return kOk;
}

struct ReportFlags {
    std::optional<std::string> dir;
    std::string reference;
    std::vector<std::string> fields{"mean"};
};

struct LoadedSeries {
    sim::ScenarioKind kind;
    double attenuation_db;
    bool safety;
    std::vector<double> seconds;
};

int cmd_report(const ReportFlags& f, std::ostream& out)
{
    fs::path root = resolve_out_dir(f.dir);
    auto ref = config::load_reference(f.reference.empty() ? config::default_reference_path() : fs::path(f.reference));
    for (const auto& name : f.fields)
        if (name != "min" && name != "max" && name != "mean" && name != "std")
            throw Error(ErrorCode::InvalidParameter, "unknown field '" + name + "' (min | max | mean | std)");
    auto selected = [&](const std::string& name) {
        return std::find(f.fields.begin(), f.fields.end(), name) != f.fields.end();
    };

    std::vector<LoadedSeries> all;
    if (fs::is_directory(root)) {
        static const std::regex pattern(R"((connect|handover)_([0-9.]+)dB_(iolw|iolws))");
        std::vector<fs::path> dirs;
        for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
            if (!it->is_directory()) continue;
            dirs.push_back(it->path());
            if (it.depth() >= 1) it.disable_recursion_pending();
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) {
            std::smatch m;
            std::string name = d.filename().string();
            if (!std::regex_match(name, m, pattern) || !fs::exists(d / "durations.csv")) continue;
            auto series = sim::read_durations_csv(d / "durations.csv");
            LoadedSeries loaded{m[1] == "connect" ? sim::ScenarioKind::RoamingConnect : sim::ScenarioKind::Handover,
                                std::stod(m[2]), m[3] == "iolws", series.seconds()};
            for (const auto& other : all)
                if (other.kind == loaded.kind && other.attenuation_db == loaded.attenuation_db &&
                    other.safety == loaded.safety)
                    throw Error(ErrorCode::ConfigError, "more than one output directory named " + name);
            all.push_back(std::move(loaded));
        }
    }
    if (all.empty()) throw Error(ErrorCode::ConfigError, "no sweep outputs found under " + root.string());
    std::sort(all.begin(), all.end(), [](const LoadedSeries& a, const LoadedSeries& b) {
        return std::tie(a.kind, a.attenuation_db, a.safety) < std::tie(b.kind, b.attenuation_db, b.safety);
    });
    auto find = [&](sim::ScenarioKind kind, double atten, bool safety) -> const LoadedSeries* {
        for (const auto& s : all)
            if (s.kind == kind && s.attenuation_db == atten && s.safety == safety) return &s;
        return nullptr;
    };

    bool ok = true;
    auto verdict = [&](bool pass) {
        ok = ok && pass;
        return pass ? "pass" : "FAIL";
    };

    out << "connect vs reference (verdict on: ";
    for (std::size_t i = 0; i < f.fields.size(); ++i) out << (i ? "," : "") << f.fields[i];
    out << ")\n";
    for (const auto& s : all) {
        if (s.kind != sim::ScenarioKind::RoamingConnect) continue;
        auto row = ref.connect_row(s.attenuation_db);
        if (!row) {
            out << "  " << atten_label(s.attenuation_db) << " dB: no reference row\n";
            continue;
        }
        for (auto [name, tol] : {std::pair{"min", &row->tolerance.min}, {"max", &row->tolerance.max},
                                 {"mean", &row->tolerance.mean}, {"std", &row->tolerance.std}})
            if (!selected(name)) *tol = 0.0;
        auto report = metrics::compare_to_reference(metrics::summarize(s.seconds), s.attenuation_db, *row,
                                                    s.safety ? Mode::Iolws : Mode::Iolw);
        char head[48];
        std::snprintf(head, sizeof head, "  %5s dB %-5s", atten_label(s.attenuation_db).c_str(),
                      s.safety ? "iolws" : "iolw");
        out << head;
        for (const auto& fc : report.fields) {
            char cellbuf[64];
            std::snprintf(cellbuf, sizeof cellbuf, "  %s %.4f/%.3f %+6.1f%%%s", fc.field.c_str(), fc.simulated,
                          fc.reference, 100.0 * fc.rel_error, fc.compared ? "" : "*");
            out << cellbuf;
        }
        out << "  " << verdict(report.pass()) << '\n';
    }
    out << "  (* not part of the verdict)\n";

    out << "handover vs connect\n";
    for (const auto& s : all) {
        if (s.kind != sim::ScenarioKind::Handover) continue;
        const LoadedSeries* c = find(sim::ScenarioKind::RoamingConnect, s.attenuation_db, s.safety);
        auto hs = metrics::summarize(s.seconds);
        char line[160];
        bool max_ok = hs.max <= ref.handover.max_limit_s;
        if (c && s.attenuation_db <= ref.handover.max_attenuation_db) {
            double surplus = hs.mean - metrics::summarize(c->seconds).mean;
            bool sur_ok = std::abs(surplus - ref.handover.surplus_s) <= ref.handover.surplus_tolerance_s;
            std::snprintf(line, sizeof line, "  %5s dB %-5s surplus %.1f ms (target %.0f +/- %.0f ms)  max %.4f s (<= %.1f)  ",
                          atten_label(s.attenuation_db).c_str(), s.safety ? "iolws" : "iolw", 1000.0 * surplus,
                          1000.0 * ref.handover.surplus_s, 1000.0 * ref.handover.surplus_tolerance_s, hs.max,
                          ref.handover.max_limit_s);
            out << line << verdict(sur_ok && max_ok) << '\n';
        } else {
            std::snprintf(line, sizeof line, "  %5s dB %-5s max %.4f s (<= %.1f)  ", atten_label(s.attenuation_db).c_str(),
                          s.safety ? "iolws" : "iolw", hs.max, ref.handover.max_limit_s);
            out << line << verdict(max_ok) << '\n';
        }
    }

    out << "quantile reference points\n";
    for (const auto& q : ref.quantile_points) {
        const LoadedSeries* s = find(q.kind, q.attenuation_db, false);
        char line[160];
        if (!s) {
            std::snprintf(line, sizeof line, "  %s %s dB: no series, skipped\n", std::string(sim::to_string(q.kind)).c_str(),
                          atten_label(q.attenuation_db).c_str());
            out << line;
            continue;
        }
        double v = metrics::Ecdf(s->seconds).quantile(q.p);
        std::snprintf(line, sizeof line, "  %s %s dB (%g dBm) q%g = %.4f s (reference %.2f s, limit %.2f s)  ",
                      std::string(sim::to_string(q.kind)).c_str(), atten_label(q.attenuation_db).c_str(), q.rssi_dbm,
                      100.0 * q.p, v, q.reference_s, q.limit_s);
        out << line << verdict(v <= q.limit_s) << '\n';
    }
    out << (ok ? "all checks passed\n" : "some checks failed\n");
    return ok ? kOk : kCheckFailed;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"IO-Link Wireless (Safety) roaming and handover simulator", "iolws-sim"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Overrides run_o, sweep_o, cal_o;
    auto* run_cmd = app.add_subcommand("run", "run one scenario and write durations, summary and eCDF");
    run_o.attach(run_cmd, true, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario over several attenuations and modes");
    sweep_o.attach(sweep_cmd, false, true);
    SweepFlags sweep_f;
    auto* atten_opt = sweep_cmd->add_option("--atten-db", sweep_f.attenuations, "attenuations, comma separated")
                          ->delimiter(',');
    sweep_cmd->add_option("--modes", sweep_f.modes, "iolw,iolws")->delimiter(',');
    sweep_cmd->add_option("--threads", sweep_f.threads, "worker threads")->check(CLI::PositiveNumber);

    auto* cal_cmd = app.add_subcommand("calibrate", "fit the PER curve to the reference connect means");
    cal_o.attach(cal_cmd, false, false);
    CalibrateFlags cal_f;
    cal_cmd->add_option("--reference", cal_f.reference, "reference tables (YAML)");
    cal_cmd->add_option("--budget", cal_f.budget, "coordinate-descent iterations")->check(CLI::PositiveNumber);
    cal_cmd->add_option("--config-out", cal_f.config_out, "where to write the calibrated config");

    auto* report_cmd = app.add_subcommand("report", "compare sweep outputs with the reference tables");
    ReportFlags report_f;
    report_cmd->add_option("--dir", report_f.dir,
                           "sweep output directory, searched two levels deep (default $IOLWS_OUTPUT_DIR or ./iolws-out)");
    report_cmd->add_option("--reference", report_f.reference, "reference tables (YAML)");
    report_cmd->add_option("--fields", report_f.fields, "fields that decide the verdict: min,max,mean,std")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run_o, out);
        if (*sweep_cmd) return cmd_sweep(sweep_o, sweep_f, atten_opt->count() > 0, out, err);
        if (*cal_cmd) return cmd_calibrate(cal_o, cal_f, out, err);
        if (*report_cmd) return cmd_report(report_f, out);
    } catch (const Error& e) {
        err << e.what() << '\n';
        switch (e.code()) {
        case ErrorCode::TooManyDiscards: return kInfeasible;
        case ErrorCode::CalibrationDiverged: return kCalibration;
        default: return kUsage;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

} // namespace iolws::cli
