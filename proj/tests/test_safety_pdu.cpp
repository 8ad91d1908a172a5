#include <doctest.h>

#include <fstream>
#include <sstream>

#include "iolws/crc16.hpp"
#include "iolws/error.hpp"
#include "iolws/mac.hpp"
#include "iolws/residual_error.hpp"
#include "iolws/rng.hpp"
#include "iolws/safety_pdu.hpp"
#include "oracles.hpp"

using namespace iolws;
using namespace iolws::pdu;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s)
{
    return {s.begin(), s.end()};
}

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n)
{
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64());
    return out;
}

SessionKey random_session_key(Rng& rng)
{
    SessionKey k;
    for (auto& b : k.key_material) b = static_cast<std::uint8_t>(rng.next_u64());
    return k;
}

const PairingIdentity kId{1, 0};

} // namespace

TEST_CASE("crc check value and bitwise reference")
{
    CHECK(compute_crc(bytes_of("123456789")) == 0x29B1);
    CHECK(oracle::crc16(bytes_of("123456789")) == 0x29B1);
    Rng rng(11);
    for (std::size_t n = 1; n <= 64; ++n) {
        auto d = random_bytes(rng, n);
        CHECK(compute_crc(d) == oracle::crc16(d));
    }
    CHECK_THROWS_AS(compute_crc({}), Error);
}

TEST_CASE("crc changes on every single-bit flip of short messages")
{
    // All one- and two-octet messages.
    for (std::uint32_t v = 0; v < 65536; ++v) {
        std::vector<std::uint8_t> d1{static_cast<std::uint8_t>(v)};
        std::vector<std::uint8_t> d2{static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
        for (auto* d : {&d1, &d2}) {
            if (d == &d1 && v > 255) continue;
            const auto base = compute_crc(*d);
            for (std::size_t bit = 0; bit < d->size() * 8; ++bit) {
                auto e = *d;
                e[bit / 8] ^= static_cast<std::uint8_t>(0x80U >> (bit % 8));
                if (compute_crc(e) == base) FAIL("undetected flip");
            }
        }
    }
    // Three and four octets: the CRC difference depends only on the error
    // pattern, so sampled messages with every flip position cover the rest.
    Rng rng(5);
    for (std::size_t n : {3u, 4u})
        for (int rep = 0; rep < 2000; ++rep) {
            auto d = random_bytes(rng, n);
            const auto base = compute_crc(d);
            for (std::size_t bit = 0; bit < n * 8; ++bit) {
                auto e = d;
                e[bit / 8] ^= static_cast<std::uint8_t>(0x80U >> (bit % 8));
                REQUIRE(compute_crc(e) != base);
            }
        }
}

TEST_CASE("mac matches an HMAC-SHA256 construction from the plain hash")
{
    Rng rng(3);
    for (std::size_t n : {0u, 1u, 28u, 63u, 64u, 65u, 200u}) {
        auto key = random_session_key(rng);
        auto msg = random_bytes(rng, n);
        auto tag = compute_mac(key, msg);
        auto ref = oracle::hmac_tag(key.key_material, msg);
        CHECK(std::equal(tag.begin(), tag.end(), ref.begin()));
        CHECK(compute_mac(key, msg) == tag);
    }
}

TEST_CASE("mac key separation and flip sensitivity")
{
    Rng rng(17);
    auto msg = random_bytes(rng, 28);
    int collisions = 0;
    for (int i = 0; i < 1000; ++i)
        if (compute_mac(random_session_key(rng), msg) == compute_mac(random_session_key(rng), msg)) ++collisions;
    CHECK(collisions == 0);

    auto key = random_session_key(rng);
    auto tag = compute_mac(key, msg);
    for (std::size_t bit = 0; bit < msg.size() * 8; ++bit) {
        auto m = msg;
        m[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
        REQUIRE(compute_mac(key, m) != tag);
    }
}

TEST_CASE("control and counter word packing")
{
    ControlMCnt c{control::kData | control::kRearm, 0xABC};
    CHECK(c.packed() == 0x5ABC);
    CHECK(ControlMCnt::unpack(0x5ABC) == c);
    CHECK(ControlMCnt{control::kData, 4095}.next().mcnt == 0);
    CHECK(ControlMCnt{control::kData, 7}.next().mcnt == 8);
}

TEST_CASE("output round trip for every payload length")
{
    Rng rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        std::size_t n = 1 + static_cast<std::size_t>(rep % 22);
        auto key = random_session_key(rng);
        auto payload = random_bytes(rng, n);
        ControlMCnt ctl{control::kData, static_cast<std::uint16_t>(rng.uniform_int(0, 4095))};
        auto frame = encode_output_pdu(payload, ctl, kId, key);
        REQUIRE(frame.size() == n + 10);
        auto d = decode_output_pdu(frame, key, kId, CounterWindow{});
        REQUIRE(d.ok());
        CHECK(d.pdu.safety_data == payload);
        CHECK(d.pdu.control_mcnt == ctl);
        CHECK(d.pdu.identity == kId);
    }
}

TEST_CASE("payload length limits")
{
    SessionKey key;
    std::vector<std::uint8_t> p22(22, 0xA5), p23(23, 0xA5);
    CHECK(encode_output_pdu(p22, {}, kId, key).size() == 32);
    try {
        encode_output_pdu(p23, {}, kId, key);
        FAIL("23 octets accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PayloadTooLong);
    }
    try {
        encode_output_pdu({}, {}, kId, key);
        FAIL("empty payload accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidLength);
    }
    CHECK(decode_output_pdu(std::vector<std::uint8_t>(10), key, kId, {}).status == DecodeStatus::InvalidLength);
    CHECK(decode_output_pdu(std::vector<std::uint8_t>(33), key, kId, {}).status == DecodeStatus::InvalidLength);
}

TEST_CASE("every single-bit flip of an output frame is rejected")
{
    Rng rng(29);
    auto key = random_session_key(rng);
    for (std::size_t n = 1; n <= 22; ++n) {
        auto frame = encode_output_pdu(random_bytes(rng, n), {control::kData, 9}, kId, key);
        for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
            auto f = frame;
            f[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
            auto d = decode_output_pdu(f, key, kId, CounterWindow{std::uint16_t{8}});
            REQUIRE(!d.ok());
            CHECK(d.status == DecodeStatus::CrcFail);
        }
    }
}

TEST_CASE("check order: crc, identity, mac, counter")
{
    Rng rng(31);
    auto key = random_session_key(rng);
    auto other = random_session_key(rng);
    std::vector<std::uint8_t> payload{1, 2, 3};

    auto wrong_id = encode_output_pdu(payload, {control::kData, 5}, {2, 0}, key);
    CHECK(decode_output_pdu(wrong_id, key, kId, {}).status == DecodeStatus::AuthMismatch);
    // Wrong identity and wrong key together: identity is checked first.
    auto both = encode_output_pdu(payload, {control::kData, 5}, {2, 0}, other);
    CHECK(decode_output_pdu(both, key, kId, {}).status == DecodeStatus::AuthMismatch);
    auto wrong_key = encode_output_pdu(payload, {control::kData, 5}, kId, other);
    CHECK(decode_output_pdu(wrong_key, key, kId, {}).status == DecodeStatus::MacFail);
    // Wrong key and stale counter: MAC first.
    CHECK(decode_output_pdu(wrong_key, key, kId, CounterWindow{std::uint16_t{5}}).status == DecodeStatus::MacFail);
    auto stale = encode_output_pdu(payload, {control::kData, 5}, kId, key);
    CHECK(decode_output_pdu(stale, key, kId, CounterWindow{std::uint16_t{5}}).status == DecodeStatus::StaleCounter);
    CHECK(decode_output_pdu(stale, key, kId, {}, {Verification::CrcOnly}).ok());
    CHECK(decode_output_pdu(wrong_key, key, kId, {}, {Verification::CrcOnly}).ok());
}

TEST_CASE("counter window")
{
    CounterWindow w{std::uint16_t{100}};
    CHECK(!w.admits(100));
    CHECK(!w.admits(99));
    CHECK(w.admits(101));
    CHECK(w.admits(116));
    CHECK(!w.admits(117));
    CounterWindow wrap{std::uint16_t{4095}};
    CHECK(wrap.admits(0));
    CHECK(wrap.admits(15));
    CHECK(!wrap.admits(16));
    CHECK(CounterWindow{}.admits(1234));
}

TEST_CASE("receiver never accepts a counter twice")
{
    Rng rng(37);
    auto key = random_session_key(rng);
    SafetyReceiver rx(key, kId);
    ControlMCnt ctl{control::kData, 4090};
    std::vector<std::vector<std::uint8_t>> sent;
    for (int i = 0; i < 40; ++i) {
        sent.push_back(encode_output_pdu(std::vector<std::uint8_t>{static_cast<std::uint8_t>(i)}, ctl, kId, key));
        ctl = ctl.next();
    }
    std::vector<std::uint16_t> accepted;
    for (const auto& f : sent) {
        auto d = rx.accept_output(f);
        REQUIRE(d.ok());
        accepted.push_back(d.pdu.control_mcnt.mcnt);
        // Immediate replay of the same frame.
        CHECK(rx.accept_output(f).status == DecodeStatus::StaleCounter);
    }
    for (std::size_t i = 1; i < accepted.size(); ++i)
        CHECK((accepted[i] + kMcntModulus - accepted[i - 1]) % kMcntModulus == 1);
    for (const auto& f : sent) CHECK(rx.accept_output(f).status == DecodeStatus::StaleCounter);
}

TEST_CASE("input frames: non-safety bytes are outside mac and crc")
{
    Rng rng(41);
    auto key = random_session_key(rng);
    auto safety = random_bytes(rng, 6);
    ControlMCnt ctl{control::kData, 77};
    auto bare = encode_input_pdu(safety, {}, ctl, kId, key);
    CHECK(bare.size() == 16);
    for (std::size_t n = 0; n <= 16; ++n) {
        auto ns = random_bytes(rng, n);
        auto f = encode_input_pdu(safety, ns, ctl, kId, key);
        REQUIRE(f.size() == 16 + n);
        CHECK(std::equal(bare.begin(), bare.end(), f.begin()));
        for (std::size_t i = 16; i < f.size(); ++i) {
            auto g = f;
            g[i] ^= 0xFF;
            auto d = decode_input_pdu(g, key, kId, CounterWindow{std::uint16_t{76}});
            REQUIRE(d.ok());
            CHECK(d.pdu.safety_data == safety);
        }
        for (std::size_t bit = 0; bit < 16 * 8; ++bit) {
            auto g = f;
            g[bit / 8] ^= static_cast<std::uint8_t>(1U << (bit % 8));
            REQUIRE(!decode_input_pdu(g, key, kId, {}).ok());
        }
    }
    CHECK_THROWS_AS(encode_input_pdu(random_bytes(rng, 5), {}, ctl, kId, key), Error);
    CHECK_THROWS_AS(encode_input_pdu(random_bytes(rng, 7), {}, ctl, kId, key), Error);
    CHECK_THROWS_AS(encode_input_pdu(safety, random_bytes(rng, 17), ctl, kId, key), Error);
}

TEST_CASE("frame corpus generated outside the library")
{
    std::ifstream f(std::string(IOLWS_TEST_DATA) + "/pdu_corpus.txt");
    REQUIRE(f);
    std::stringstream buf;
    buf << f.rdbuf();
    auto entries = parse_corpus(buf.str());
    REQUIRE(entries.size() >= 20);
    for (const auto& e : entries) {
        auto d = decode_output_pdu(e.frame, e.key, e.expected_id, e.window);
        INFO(to_hex(e.frame));
        CHECK(to_string(d.status) == to_string(e.expected));
    }
}

TEST_CASE("hex helpers")
{
    std::vector<std::uint8_t> b{0x00, 0x7f, 0xA5, 0xff};
    CHECK(to_hex(b) == "007fa5ff");
    CHECK(from_hex("007FA5ff") == b);
    CHECK_THROWS_AS(from_hex("abc"), Error);
    CHECK_THROWS_AS(from_hex("zz"), Error);
}

TEST_CASE("residual error estimate")
{
    auto clean = estimate_undetected_rate(0.0, 10'000, 1);
    CHECK(clean.corrupted == 0);
    CHECK(clean.undetected == 0);
    CHECK(clean.rate == 0.0);
    auto noisy = estimate_undetected_rate(0.5, 20'000, 2);
    CHECK(noisy.undetected == 0);
    CHECK(noisy.corrupted > 19'990);
    CHECK_THROWS_AS(estimate_undetected_rate(0.6, 10'000, 1), Error);
    CHECK_THROWS_AS(estimate_undetected_rate(-0.1, 10'000, 1), Error);
    CHECK_THROWS_AS(estimate_undetected_rate(0.1, 9'999, 1), Error);
}
