#include <doctest.h>

#include <filesystem>
#include <string>

#include "iolws/digest.hpp"
#include "iolws/error.hpp"
#include "iolws/event_queue.hpp"
#include "iolws/scenario.hpp"
#include "iolws/testbed.hpp"

using namespace iolws;
using namespace iolws::sim;
using std::chrono::milliseconds;

namespace {

ScenarioConfig small(double atten, bool safety = false, unsigned reps = 40)
{
    ScenarioConfig c;
    c.attenuation_on_db = atten;
    c.safety = safety;
    c.repetitions = reps;
    return c;
}

} // namespace

TEST_CASE("event queue orders by time, priority and insertion")
{
    EventQueue<int> q;
    q.push(SimTime{10}, 1, Priority::Late);
    q.push(SimTime{10}, 2);
    q.push(SimTime{5}, 3);
    q.push(SimTime{10}, 4);
    q.push(SimTime{10}, 5, Priority::Late);
    std::vector<int> order;
    while (!q.empty()) order.push_back(q.pop().payload);
    CHECK(order == std::vector<int>{3, 2, 4, 1, 5});
    CHECK(q.now() == SimTime{10});
    CHECK_THROWS_AS(q.push(SimTime{9}, 6), Error);
    CHECK_NOTHROW(q.push(SimTime{10}, 7));
}

TEST_CASE("attenuator schedule")
{
    ScenarioConfig c;
    auto edges = attenuator_process(c, SimTime{milliseconds(9000)});
    REQUIRE(edges.size() == 5);
    CHECK(edges[0].at == SimTime{0});
    CHECK(!edges[0].on);
    for (std::size_t i = 1; i < edges.size(); ++i) {
        CHECK(edges[i].at - edges[i - 1].at == milliseconds(2000));
        CHECK(edges[i].on != edges[i - 1].on);
    }
    CHECK(c.first_on_edge() == milliseconds(2000));
    CHECK(c.cycle_period() == milliseconds(4000));
}

TEST_CASE("duration quantization and formatting")
{
    CHECK(quantize_duration(Duration{0}) == Duration{0});
    CHECK(quantize_duration(Duration{1}) == Duration{100});
    CHECK(quantize_duration(Duration{100}) == Duration{100});
    CHECK(quantize_duration(Duration{429'001}) == Duration{429'100});
    CHECK_THROWS_AS(quantize_duration(Duration{-1}), Error);

    CHECK(format_seconds(Duration{429'000}) == "0.4290");
    CHECK(format_seconds(Duration{1'234'567}) == "1.2346");
    CHECK(format_seconds(Duration{5'000'000}) == "5.0000");
    CHECK(parse_seconds("0.4290") == Duration{429'000});
    CHECK(parse_seconds("12") == Duration{12'000'000});
    CHECK(parse_seconds("0.000001") == Duration{1});
    CHECK_THROWS_AS(parse_seconds("-1.0"), Error);
    CHECK_THROWS_AS(parse_seconds(".5"), Error);
    CHECK_THROWS_AS(parse_seconds("0.1234567"), Error);
    CHECK_THROWS_AS(parse_seconds("1e3"), Error);
}

TEST_CASE("config validation")
{
    CHECK_NOTHROW(ScenarioConfig{}.validate());
    auto c = small(30.0);
    c.repetitions = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(121.0);
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(103.0);
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(30.0);
    c.on_duration = Duration{0};
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("digest follows the canonical rendering")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    ScenarioConfig a, b;
    CHECK(a.digest() == b.digest());
    CHECK(a.digest().size() == 16);
    CHECK(a.digest() == sha256_hex(a.canonical()).substr(0, 16));
    b.seed = 2;
    CHECK(a.digest() != b.digest());
    b = a;
    b.per_curve.slope = std::nextafter(b.per_curve.slope, 1.0);
    CHECK(a.digest() != b.digest());
}

TEST_CASE("scenario runs are deterministic and carry their provenance")
{
    auto c = small(65.0, true);
    auto s1 = run_scenario(c);
    auto s2 = run_scenario(c);
    CHECK(s1 == s2);
    CHECK(s1.samples.size() == c.repetitions);
    CHECK(s1.seed == c.seed);
    CHECK(s1.scenario_digest == c.digest());
    for (auto d : s1.samples) CHECK(d.count() % kSamplingStep.count() == 0);
    c.seed = 2;
    CHECK(run_scenario(c).samples != s1.samples);
}

TEST_CASE("csv round trip is exact")
{
    auto s = run_scenario(small(80.0));
    auto text = durations_csv(s);
    CHECK(text.rfind("# tool_version=", 0) == 0);
    CHECK(text.find("rep_index,duration_s\n") != std::string::npos);
    auto back = parse_durations_csv(text);
    CHECK(back == s);
    CHECK(durations_csv(back) == text);

    auto dir = std::filesystem::temp_directory_path() / "iolws_sim_engine_test";
    std::filesystem::create_directories(dir);
    write_durations_csv(dir / "d.csv", s);
    CHECK(read_durations_csv(dir / "d.csv") == s);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(read_durations_csv("/nonexistent/d.csv"), Error);
    CHECK_THROWS_AS(parse_durations_csv("# seed=1\n0,0.1\n"), Error);
    CHECK_THROWS_AS(parse_durations_csv("rep_index,duration_s\n1,0.1\n"), Error);
}

TEST_CASE("parallel sweep equals serial sweep")
{
    std::vector<ScenarioConfig> configs;
    for (double a : {30.0, 65.0, 80.0, 83.0})
        for (bool safety : {false, true}) configs.push_back(small(a, safety, 30));
    auto serial = run_sweep(configs, 1);
    auto parallel = run_sweep(configs, 4);
    REQUIRE(serial.size() == configs.size());
    CHECK(serial == parallel);
    for (std::size_t i = 0; i < configs.size(); ++i) CHECK(serial[i] == run_scenario(configs[i]));
}

TEST_CASE("a dead link is reported as too many discards")
{
    auto c = small(100.0, false, 2);
    try {
        run_scenario(c);
        FAIL("expected TooManyDiscards");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooManyDiscards);
    }
    auto outcomes = run_sweep_outcomes({small(30.0, false, 5), c}, 2);
    CHECK(outcomes[0].series.has_value());
    CHECK(outcomes[1].error != nullptr);
    CHECK_THROWS_AS(run_sweep({small(30.0, false, 5), c}), Error);

    Rng rng(1);
    CHECK_THROWS_AS(measure_connect(c, rng), Error);
}

TEST_CASE("carry-over into later ON windows")
{
    auto c = small(83.0, false, 100);
    c.max_carry_cycles = 0;
    auto strict = run_scenario(c);
    for (auto d : strict.samples) CHECK(d <= c.on_duration);
    c.max_carry_cycles = 1;
    auto carried = run_scenario(c);
    CHECK(carried.discarded <= strict.discarded);
}
