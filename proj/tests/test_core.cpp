#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bbl/core.hpp"

#include <string>

using namespace bbl;

namespace {
Msg propose(const std::string& v) {
    Msg m;
    m.tag = Tag::Propose;
    m.value = Value::of(v);
    return m;
}
}  // namespace

TEST_CASE("bottom sorts below every value") {
    CHECK(Value::bottom() < Value::of(""));
    CHECK(Value::bottom() < Value::of("0"));
    CHECK(Value::of("0") < Value::of("1"));
    CHECK(Value::bottom() == Value::bottom());
    CHECK(Value::of("x") != Value::bottom());
}

TEST_CASE("digests are deterministic and structure-sensitive") {
    SignedPayload a = make_signed(0, propose("v"));
    SignedPayload b = make_signed(0, propose("v"));
    CHECK(payload_digest(a) == payload_digest(b));
    CHECK(payload_digest(a) != payload_digest(make_signed(1, propose("v"))));
    CHECK(payload_digest(a) != payload_digest(make_signed(0, propose("w"))));

    Msg wrapped;
    wrapped.tag = Tag::Vote;
    wrapped.parts.push_back(a);
    Msg wrapped2 = wrapped;
    wrapped2.parts[0] = make_signed(0, propose("w"));
    CHECK(payload_digest(make_signed(2, wrapped)) != payload_digest(make_signed(2, wrapped2)));
}

TEST_CASE("signing appends to the chain and verifies") {
    SignedPayload sp = make_signed(0, propose("v"));
    REQUIRE(sp.chain.size() == 1);
    CHECK(sp.chain[0].signer == 0);
    CHECK(verify_chain(sp));

    SignedPayload counter = countersign(2, countersign(1, sp));
    REQUIRE(counter.chain.size() == 3);
    CHECK(counter.chain[0].signer == 0);
    CHECK(counter.chain[1].signer == 1);
    CHECK(counter.chain[2].signer == 2);
    CHECK(verify_chain(counter));
}

TEST_CASE("tampering breaks chain verification") {
    SignedPayload sp = countersign(1, make_signed(0, propose("v")));
    SignedPayload tampered = sp;
    tampered.body.value = Value::of("w");
    CHECK(!verify_chain(tampered));

    SignedPayload swapped = sp;
    swapped.chain[1].signer = 2;  // claims party 2 countersigned
    CHECK(!verify_chain(swapped));

    // A bad nested part poisons the container.
    Msg bundle;
    bundle.tag = Tag::Bundle;
    bundle.parts.push_back(tampered);
    CHECK(!verify_chain(unsigned_container(bundle)));
}

TEST_CASE("extraction attributes values to the chain originator") {
    PartyId broadcaster = 3;
    SignedPayload prop0 = make_signed(broadcaster, propose("0"));
    CHECK(extract_broadcaster_values({prop0}, broadcaster) == std::set<Value>{Value::of("0")});

    // A forwarded vote wrapping a conflicting proposal counts as equivocation.
    Msg vote;
    vote.tag = Tag::Vote;
    vote.parts.push_back(make_signed(broadcaster, propose("1")));
    SignedPayload vote1 = make_signed(1, vote);
    auto got = extract_broadcaster_values({prop0, vote1}, broadcaster);
    CHECK(got == std::set<Value>{Value::of("0"), Value::of("1")});

    CHECK(extract_broadcaster_values({}, broadcaster).empty());

    // The vote itself is attributed to party 1, not the broadcaster.
    CHECK(extract_broadcaster_values({vote1}, 1).empty());  // vote body has no value
}

TEST_CASE("extraction is monotone under supersets") {
    PartyId b = 0;
    SignedPayload p0 = make_signed(b, propose("0"));
    SignedPayload p1 = make_signed(b, propose("1"));
    SignedPayload other = make_signed(2, propose("2"));
    auto small = extract_broadcaster_values({p0, p1}, b);
    REQUIRE(small.size() == 2);
    auto big = extract_broadcaster_values({p0, p1, other, countersign(1, p0)}, b);
    for (const auto& v : small) CHECK(big.count(v) == 1);
}

TEST_CASE("threshold formulas") {
    ThresholdSet t = thresholds({4, 1, Setting::PsyncFast, false});
    CHECK(t.q_cert == 3);
    CHECK(t.q_lock_lo == 1);
    CHECK(t.q_lock_hi == 2);

    ThresholdSet a = thresholds({4, 1, Setting::AsyncBrb, false});
    CHECK(a.q_nf == 3);
    CHECK(a.q_f1 == 2);
}

TEST_CASE("out-of-region resilience errors name the violated inequality") {
    try {
        thresholds({4, 2, Setting::PsyncFast, false});
        FAIL("expected a resilience error");
    } catch (const ResilienceError& e) {
        CHECK(std::string(e.what()).find("n >= 5f-1") != std::string::npos);
    }
    CHECK_THROWS_AS(thresholds({3, 1, Setting::AsyncBrb, false}), ResilienceError);
    CHECK_THROWS_AS(thresholds({7, 2, Setting::SyncEqThird, false}), ResilienceError);
    CHECK_THROWS_AS(thresholds({6, 2, Setting::SyncMinority, false}), ResilienceError);
    CHECK_THROWS_AS(thresholds({6, 2, Setting::SyncMajority, false}), ResilienceError);
    CHECK_THROWS_AS(thresholds({3, 1, Setting::SyncThird, false}), ResilienceError);

    // The override admits out-of-region worlds for negative tests.
    CHECK(thresholds({3, 1, Setting::AsyncBrb, true}).q_nf == 2);
    // Basic sanity still holds even with the override.
    CHECK_THROWS_AS(thresholds({3, 3, Setting::AsyncBrb, true}), ResilienceError);
    CHECK_THROWS_AS(thresholds({0, 0, Setting::AsyncBrb, true}), ResilienceError);
}

TEST_CASE("admissible regions per setting") {
    CHECK(!region_violation({4, 1, Setting::AsyncBrb, false}));
    CHECK(!region_violation({7, 2, Setting::AsyncBrb, false}));
    CHECK(!region_violation({4, 1, Setting::PsyncFast, false}));
    CHECK(!region_violation({9, 2, Setting::PsyncFast, false}));
    CHECK(!region_violation({4, 1, Setting::SyncThird, false}));
    CHECK(!region_violation({3, 1, Setting::SyncEqThird, false}));
    CHECK(!region_violation({5, 2, Setting::SyncMinority, false}));
    CHECK(!region_violation({6, 4, Setting::SyncMajority, false}));
    CHECK(region_violation({6, 3, Setting::SyncMinority, false}));  // f = n/2
    CHECK(region_violation({9, 3, Setting::SyncMinority, false}));  // f = n/3
}

TEST_CASE("quorum intersection holds across the async region") {
    // Two quorums of size n-f overlap in at least f+1 parties when n >= 3f+1,
    // which is what pins down a unique committed value.
    for (int f = 0; f <= 3; ++f)
        for (int n = 3 * f + 1; n <= 3 * f + 4; ++n) {
            ThresholdSet t = thresholds({n, f, Setting::AsyncBrb, false});
            CHECK(2 * t.q_nf - n >= f + 1);
        }
}

TEST_CASE("setting names round-trip") {
    for (Setting s : {Setting::AsyncBrb, Setting::PsyncFast, Setting::SyncThird,
                      Setting::SyncEqThird, Setting::SyncMinority, Setting::SyncMajority})
        CHECK(parse_setting(setting_name(s)) == s);
    CHECK(!parse_setting("nonsense"));
}
