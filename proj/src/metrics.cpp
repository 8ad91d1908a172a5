#include "iolws/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iolws/error.hpp"

namespace iolws::metrics {

SummaryStats summarize(const std::vector<double>& seconds)
{
    if (seconds.empty()) throw Error(ErrorCode::EmptySeries, "cannot summarize an empty series");
    SummaryStats s;
    s.count = seconds.size();
    s.min = *std::min_element(seconds.begin(), seconds.end());
    s.max = *std::max_element(seconds.begin(), seconds.end());
    // Sorted summation keeps the result independent of sample order.
    std::vector<double> sorted = seconds;
    std::sort(sorted.begin(), sorted.end());
    // Shifted by the smallest sample, so a constant series gives its value
    // and a zero deviation exactly.
    const double shift = sorted.front();
    double sum = 0.0;
    for (double x : sorted) sum += x - shift;
    const double offset = sum / static_cast<double>(s.count);
    s.mean = shift + offset;
    if (s.count > 1) {
        double ss = 0.0;
        for (double x : sorted) ss += (x - shift - offset) * (x - shift - offset);
        s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

SummaryStats summarize(const sim::DurationSeries& series)
{
    return summarize(series.seconds());
}

Ecdf::Ecdf(std::vector<double> seconds) : sorted_(std::move(seconds))
{
    if (sorted_.empty()) throw Error(ErrorCode::EmptySeries, "cannot build an eCDF from an empty series");
    std::sort(sorted_.begin(), sorted_.end());
}

Ecdf::Ecdf(const sim::DurationSeries& series) : Ecdf(series.seconds()) {}

namespace {

double fraction(std::size_t k, std::size_t n)
{
    return static_cast<double>(k) / static_cast<double>(n);
}

void check_probability(double p)
{
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParameter, "quantile probability must lie in (0, 1]");
}

} // namespace

double Ecdf::operator()(double t) const
{
    auto k = static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin());
    return fraction(k, sorted_.size());
}

double Ecdf::quantile(double p) const
{
    check_probability(p);
    const std::size_t n = sorted_.size();
    auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n);
    while (k > 1 && fraction(k - 1, n) >= p) --k;
    while (k < n && fraction(k, n) < p) ++k;
    return sorted_[k - 1];
}

std::vector<std::pair<double, double>> Ecdf::steps() const
{
    std::vector<std::pair<double, double>> out;
    const std::size_t n = sorted_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 < n && sorted_[i + 1] == sorted_[i]) continue;
        out.emplace_back(sorted_[i], fraction(i + 1, n));
    }
    return out;
}

std::string_view to_string(Mode mode) noexcept
{
    return mode == Mode::Iolw ? "iolw" : "iolws";
}

bool ComparisonReport::pass() const
{
    return std::all_of(fields.begin(), fields.end(), [](const FieldCheck& f) { return f.pass; });
}

const FieldCheck& ComparisonReport::field(std::string_view name) const
{
    for (const auto& f : fields)
        if (f.field == name) return f;
    throw Error(ErrorCode::InvalidParameter, "no field '" + std::string(name) + "' in comparison");
}

ComparisonReport compare_to_reference(const SummaryStats& stats, double attenuation_db, const ReferenceRow& row,
                                      Mode mode)
{
    if (attenuation_db != row.attenuation_db) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "simulated %g dB against reference row %g dB", attenuation_db,
                      row.attenuation_db);
        throw Error(ErrorCode::RowMismatch, buf);
    }
    const ReferenceStats& ref = row.stats(mode);
    ComparisonReport report;
    report.attenuation_db = attenuation_db;
    report.mode = mode;
    auto check = [&](const char* name, double sim, double reference, double tol) {
        if (tol < 0.0) throw Error(ErrorCode::InvalidParameter, std::string("negative tolerance for ") + name);
        FieldCheck f{name, sim, reference, 0.0, tol, tol > 0.0, true};
        f.rel_error = reference != 0.0 ? (sim - reference) / reference : (sim == 0.0 ? 0.0 : INFINITY);
        if (f.compared) f.pass = std::abs(f.rel_error) <= tol;
        report.fields.push_back(f);
    };
    check("min", stats.min, ref.min, row.tolerance.min);
    check("max", stats.max, ref.max, row.tolerance.max);
    check("mean", stats.mean, ref.mean, row.tolerance.mean);
    check("std", stats.std, ref.std, row.tolerance.std);
    return report;
}

// --- eCDF CSV ----------------------------------------------------------------

namespace {

constexpr std::string_view kEcdfHeader = "duration_s,cumulative_probability";

std::string format_duration(double seconds)
{
    return sim::format_seconds(sim::Duration{std::llround(seconds * 1e6)});
}

double step_quantile(const std::vector<std::pair<double, double>>& steps, double p)
{
    check_probability(p);
    for (const auto& [t, f] : steps)
        if (f >= p) return t;
    return steps.back().first;
}

} // namespace

std::string ecdf_csv(const Ecdf& ecdf, std::uint64_t seed, std::string_view config_digest)
{
    std::string out = sim::artifact_header(seed, config_digest);
    out += kEcdfHeader;
    out.push_back('\n');
    auto steps = ecdf.steps();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        char prob[40];
        if (i + 1 == steps.size()) std::snprintf(prob, sizeof prob, "1.0");
        else std::snprintf(prob, sizeof prob, "%.17g", steps[i].second);
        out += format_duration(steps[i].first);
        out.push_back(',');
        out += prob;
        out.push_back('\n');
    }
    return out;
}

void export_ecdf_csv(const std::filesystem::path& path, const Ecdf& ecdf, std::uint64_t seed,
                     std::string_view config_digest)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    f << ecdf_csv(ecdf, seed, config_digest);
    if (!f) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

double EcdfTable::quantile(double p) const
{
    if (steps.empty()) throw Error(ErrorCode::EmptySeries, "empty eCDF table");
    return step_quantile(steps, p);
}

EcdfTable parse_ecdf_csv(std::string_view text)
{
    EcdfTable table;
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
            if (key == "config_digest") table.config_digest = value;
            else if (key == "seed") {
                try {
                    table.seed = std::stoull(value);
                } catch (const std::exception&) {
                    throw Error(ErrorCode::IoError, "bad header value: " + line);
                }
            }
            continue;
        }
        if (!header_seen) {
            if (line != kEcdfHeader) throw Error(ErrorCode::IoError, "unexpected eCDF header: " + line);
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::IoError, "malformed row: " + line);
        double t = static_cast<double>(sim::parse_seconds(std::string_view(line).substr(0, comma)).count()) / 1e6;
        double f = 0.0;
        try {
            std::size_t used = 0;
            f = std::stod(line.substr(comma + 1), &used);
            if (used != line.size() - comma - 1) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, "malformed probability: " + line);
        }
        if (!table.steps.empty() && (t <= table.steps.back().first || f < table.steps.back().second))
            throw Error(ErrorCode::IoError, "eCDF rows out of order: " + line);
        table.steps.emplace_back(t, f);
    }
    if (!header_seen) throw Error(ErrorCode::IoError, "missing eCDF header");
    if (table.steps.empty()) throw Error(ErrorCode::EmptySeries, "eCDF file has no rows");
    if (table.steps.back().second != 1.0) throw Error(ErrorCode::IoError, "eCDF does not end at probability 1");
    return table;
}

EcdfTable import_ecdf_csv(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    try {
        return parse_ecdf_csv(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

} // namespace iolws::metrics
