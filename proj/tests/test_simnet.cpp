#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bbl/simnet.hpp"

#include <set>
#include <string>

using namespace bbl;

namespace {

// Minimal two-hop protocol for exercising the simulator: the lead party
// multicasts one ping, every party acks the ping to its sender, and the lead
// commits once it holds acks from all n parties.
struct PingParty : IParty {
    bool lead;
    std::string val;
    std::set<PartyId> acks;

    explicit PingParty(bool lead, std::string val = "ping") : lead(lead), val(std::move(val)) {}

    void on_start(Ctx& ctx, Actions& out) override {
        if (!lead) return;
        Msg m;
        m.tag = Tag::Propose;
        m.value = Value::of(val);
        out.multicast(ctx.n, ctx.sign(std::move(m)));
    }

    void on_deliver(Ctx& ctx, PartyId from, const SignedPayload& sp, Actions& out) override {
        if (sp.body.tag == Tag::Propose) {
            Msg m;
            m.tag = Tag::Vote;
            m.value = sp.body.value;
            out.send(from, ctx.sign(std::move(m)));
        } else if (sp.body.tag == Tag::Vote && lead) {
            acks.insert(from);
            if (static_cast<int>(acks.size()) == ctx.n) {
                out.commit(Value::of(val));
                out.terminate = true;
            }
        }
    }
};

World ping_world(int n, TimingModel model, Rat base_delay) {
    World w;
    w.res = Resilience{n, 0, Setting::SyncThird, false};
    w.model = model;
    w.broadcaster = 0;
    for (PartyId p = 0; p < n; ++p)
        w.roles.push_back(HonestRole{[p] { return std::make_unique<PingParty>(p == 0); }});
    w.base_delay = base_delay;
    return w;
}

}  // namespace

TEST_CASE("two-hop commit lands at exactly twice the delay") {
    World w = ping_world(4, TimingModel::synchrony(Rat(2), Rat(10), Rat(0)), Rat(2));
    Trace tr = run(w, Rat(100));
    REQUIRE(tr.commit_time_of(0).has_value());
    CHECK(*tr.commit_time_of(0) == Rat(4));
    CHECK(*tr.commit_of(0) == Value::of("ping"));
}

TEST_CASE("identical worlds give byte-identical traces") {
    World w = ping_world(4, TimingModel::synchrony(Rat(2), Rat(10), Rat(0)), Rat(2));
    Trace a = run(w, Rat(100));
    Trace b = run(w, Rat(100));
    CHECK(a.to_jsonl() == b.to_jsonl());
    for (PartyId p = 0; p < 4; ++p) CHECK(compare_local_history(a, b, p, kNoCutoff));
}

TEST_CASE("local histories diverge when payloads do") {
    World wa = ping_world(3, TimingModel::synchrony(Rat(2), Rat(10), Rat(0)), Rat(2));
    World wb = ping_world(3, TimingModel::synchrony(Rat(2), Rat(10), Rat(0)), Rat(2));
    wb.roles[0] = HonestRole{[] { return std::make_unique<PingParty>(true, "other"); }};
    Trace a = run(wa, Rat(100));
    Trace b = run(wb, Rat(100));
    HistoryDiff d = diff_local_history(a, b, 1, kNoCutoff);
    CHECK(d.differs);
    CHECK(d.what == "payload");
    // Before anything arrives the histories agree.
    CHECK(compare_local_history(a, b, 1, Rat(0)));
    CHECK(compare_local_history(a, b, 1, Rat(2)));  // the ping lands at local 2
}

TEST_CASE("round assignment puts the two-hop commit in round 2") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    Trace tr = run(w, Rat(100));
    RoundAssignment ra = assign_async_rounds(tr);
    CHECK(ra.max_round == 2);
    int ping_delivers = 0;
    int ack_delivers = 0;
    for (const auto& e : tr.events) {
        if (e.kind == EventKind::Deliver && e.payload.body.tag == Tag::Propose) {
            CHECK(ra.of_event(e) == 1);
            ++ping_delivers;
        }
        if (e.kind == EventKind::Deliver && e.payload.body.tag == Tag::Vote) {
            CHECK(ra.of_event(e) == 2);
            ++ack_delivers;
        }
        if (e.kind == EventKind::Commit) CHECK(ra.of_event(e) == 2);
        if (e.kind == EventKind::Start) CHECK(ra.of_event(e) == 0);
    }
    CHECK(ping_delivers == 4);
    CHECK(ack_delivers == 4);
}

TEST_CASE("a trace with no messages sits in round 0") {
    World w = ping_world(3, TimingModel::asynchrony(), Rat(1));
    for (auto& r : w.roles) r = HonestRole{[] { return std::make_unique<PingParty>(false); }};
    Trace tr = run(w, Rat(10));
    RoundAssignment ra = assign_async_rounds(tr);
    CHECK(ra.max_round == 0);
    for (const auto& e : tr.events) CHECK(ra.of_event(e) == 0);
}

TEST_CASE("out-of-model delays are rejected") {
    World w = ping_world(4, TimingModel::synchrony(Rat(2), Rat(10), Rat(0)), Rat(2));
    w.delay_policy = [](const SendMeta&) { return std::optional<Rat>(Rat(11)); };
    try {
        run(w, Rat(100));
        FAIL("expected a model violation");
    } catch (const SimError& e) {
        CHECK(std::string(e.what()).find("model violation") != std::string::npos);
    }
}

TEST_CASE("negative delays are rejected") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.delay_policy = [](const SendMeta&) { return std::optional<Rat>(Rat(-1)); };
    CHECK_THROWS_AS(run(w, Rat(100)), SimError);
}

TEST_CASE("partial synchrony bounds arrivals by max(send, GST) + Delta") {
    World w = ping_world(4, TimingModel::partial_synchrony(Rat(10), Rat(50)), Rat(1));
    // Sent at 0, GST 50: anything arriving by 60 is fine.
    w.delay_policy = [](const SendMeta& m) {
        return std::optional<Rat>(m.g_send == Rat(0) ? Rat(55) : Rat(5));
    };
    CHECK_NOTHROW(run(w, Rat(1000)));
    // Arriving at 61 violates the bound.
    World bad = ping_world(4, TimingModel::partial_synchrony(Rat(10), Rat(50)), Rat(1));
    bad.delay_policy = [](const SendMeta& m) {
        return std::optional<Rat>(m.g_send == Rat(0) ? Rat(61) : Rat(5));
    };
    CHECK_THROWS_AS(run(bad, Rat(1000)), SimError);
}

TEST_CASE("dropping between honest parties is illegal") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.delay_policy = [](const SendMeta& m) {
        return m.to == 2 ? std::nullopt : std::optional<Rat>(Rat(1));
    };
    CHECK_THROWS_AS(run(w, Rat(100)), SimError);
}

TEST_CASE("dropping to a Byzantine endpoint is fine") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.res.f = 1;
    w.roles[2] = ByzScript{};  // silent Byzantine party, no personalities
    w.delay_policy = [](const SendMeta& m) {
        return m.to == 2 ? std::nullopt : std::optional<Rat>(Rat(1));
    };
    Trace tr = run(w, Rat(100));
    // Sends to party 2 are on the record but nothing arrives there.
    bool sent_to_2 = false;
    for (const auto& e : tr.events) {
        if (e.kind == EventKind::Send && e.peer == 2) sent_to_2 = true;
        if (e.kind == EventKind::Deliver) CHECK(e.party != 2);
    }
    CHECK(sent_to_2);
}

TEST_CASE("undelivered honest traffic at the horizon is unfair") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.delay_policy = [](const SendMeta& m) {
        return std::optional<Rat>(m.to == 3 ? Rat(1000) : Rat(1));
    };
    try {
        run(w, Rat(10));
        FAIL("expected a fairness error");
    } catch (const SimError& e) {
        CHECK(std::string(e.what()).find("unfair") != std::string::npos);
    }
}

TEST_CASE("messages arriving before the receiver starts wait for it") {
    World w = ping_world(4, TimingModel::synchrony(Rat(2), Rat(10), Rat(2)), Rat(2));
    w.start_offsets = {Rat(0), Rat(2), Rat(0), Rat(0)};
    w.delay_policy = [](const SendMeta& m) {
        return std::optional<Rat>(m.to == 1 ? Rat(1) : Rat(2));
    };
    Trace tr = run(w, Rat(100));
    auto events = tr.of_party(1);
    REQUIRE(events.size() >= 2);
    CHECK(events[0]->kind == EventKind::Start);
    CHECK(events[0]->g_time == Rat(2));
    CHECK(events[1]->kind == EventKind::Deliver);  // sent at 0, arrived at 1, held to 2
    CHECK(events[1]->g_time == Rat(2));
    CHECK(events[1]->l_time == Rat(0));
}

TEST_CASE("start offsets above sigma are rejected under synchrony") {
    World w = ping_world(3, TimingModel::synchrony(Rat(2), Rat(10), Rat(1)), Rat(2));
    w.start_offsets = {Rat(0), Rat(2), Rat(0)};
    CHECK_THROWS_AS(run(w, Rat(100)), ConfigError);
}

TEST_CASE("deliveries at an instant precede timer firings at that instant") {
    struct Probe : IParty {
        void on_start(Ctx& ctx, Actions& out) override {
            if (ctx.self == 0) {
                Msg m;
                m.tag = Tag::Propose;
                m.value = Value::of("x");
                out.send(1, ctx.sign(std::move(m)));
            }
            if (ctx.self == 1) out.timer("deadline", Rat(2));
        }
        void on_deliver(Ctx& ctx, PartyId, const SignedPayload&, Actions& out) override {
            if (ctx.self == 1) out.timer("past", Rat(0));  // already due, fires this instant
        }
    };
    World w;
    w.res = Resilience{2, 0, Setting::SyncThird, false};
    w.model = TimingModel::synchrony(Rat(2), Rat(10), Rat(0));
    w.base_delay = Rat(2);
    for (PartyId p = 0; p < 2; ++p)
        w.roles.push_back(HonestRole{[] { return std::make_unique<Probe>(); }});
    Trace tr = run(w, Rat(100));
    auto events = tr.of_party(1);
    REQUIRE(events.size() == 4);
    CHECK(events[0]->kind == EventKind::Start);
    CHECK(events[1]->kind == EventKind::Deliver);
    CHECK(events[2]->kind == EventKind::TimerFire);
    CHECK(events[2]->tag == "deadline");
    CHECK(events[3]->kind == EventKind::TimerFire);
    CHECK(events[3]->tag == "past");
    CHECK(events[3]->g_time == Rat(2));
}

TEST_CASE("a second commit by an honest party is an error") {
    struct DoubleCommitter : IParty {
        void on_start(Ctx&, Actions& out) override {
            out.commit(Value::of("a"));
            out.commit(Value::of("b"));
        }
        void on_deliver(Ctx&, PartyId, const SignedPayload&, Actions&) override {}
    };
    World w;
    w.res = Resilience{1, 0, Setting::SyncThird, false};
    w.model = TimingModel::asynchrony();
    w.roles.push_back(HonestRole{[] { return std::make_unique<DoubleCommitter>(); }});
    CHECK_THROWS_AS(run(w, Rat(10)), SimError);
}

TEST_CASE("forged signatures are caught at send time") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.res.f = 1;
    ByzScript script;
    script.forge_as = 0;
    w.roles[2] = std::move(script);
    try {
        run(w, Rat(100));
        FAIL("expected a forgery fault");
    } catch (const SimError& e) {
        CHECK(std::string(e.what()).find("forgery") != std::string::npos);
    }
}

TEST_CASE("scripted raw sends with the party's own signature pass the registry") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.res.f = 1;
    ByzScript script;
    script.raw_sends.push_back(ByzRawSend{
        Rat(1),
        {0},
        [](Ctx& ctx) {
            Msg m;
            m.tag = Tag::Propose;
            m.value = Value::of("genuine");
            return ctx.sign(std::move(m));
        }});
    w.roles[2] = std::move(script);
    Trace tr = run(w, Rat(100));
    bool delivered = false;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::Deliver && e.party == 0 && e.peer == 2 &&
            e.payload.body.value == Value::of("genuine"))
            delivered = true;
    CHECK(delivered);
}

TEST_CASE("split personalities equivocate along their audiences") {
    World w;
    w.res = Resilience{3, 1, Setting::AsyncBrb, true};  // n=3 needs the override
    w.model = TimingModel::asynchrony();
    w.base_delay = Rat(1);
    w.broadcaster = 0;
    ByzScript split;
    split.personalities.push_back(ByzPersonality{
        [] { return std::make_unique<PingParty>(true, "A"); }, std::set<PartyId>{0, 1}, nullptr});
    split.personalities.push_back(ByzPersonality{
        [] { return std::make_unique<PingParty>(true, "B"); }, std::set<PartyId>{2}, nullptr});
    w.roles.push_back(std::move(split));
    for (PartyId p = 1; p < 3; ++p)
        w.roles.push_back(HonestRole{[] { return std::make_unique<PingParty>(false); }});
    Trace tr = run(w, Rat(100));
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Deliver || e.payload.body.tag != Tag::Propose) continue;
        if (e.party == 1) CHECK(e.payload.body.value == Value::of("A"));
        if (e.party == 2) CHECK(e.payload.body.value == Value::of("B"));
    }
}

TEST_CASE("every signature in a trace originates with its signer") {
    World w = ping_world(4, TimingModel::synchrony(Rat(2), Rat(10), Rat(0)), Rat(2));
    Trace tr = run(w, Rat(100));
    // First appearance of each (signer, digest) link must be in a send by the
    // signer itself; later appearances are legal re-transmissions.
    std::set<std::pair<PartyId, std::uint64_t>> seen;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Send) continue;
        std::vector<Signature> sigs;
        detail::collect_signatures(e.payload, sigs);
        for (const auto& s : sigs) {
            if (seen.count({s.signer, s.digest})) continue;
            CHECK(e.party == s.signer);
            seen.insert({s.signer, s.digest});
        }
    }
    CHECK(!seen.empty());
}

TEST_CASE("byzantine head counts above the budget are rejected") {
    World w = ping_world(4, TimingModel::asynchrony(), Rat(1));
    w.res.f = 1;
    w.roles[1] = ByzScript{};
    w.roles[2] = ByzScript{};
    CHECK_THROWS_AS(run(w, Rat(10)), ConfigError);
}

TEST_CASE("jsonl lines carry rational timestamps and digests") {
    World w = ping_world(2, TimingModel::synchrony(Rat(1), Rat(10), Rat(0)), Rat(1));
    Trace tr = run(w, Rat(100));
    std::string out = tr.to_jsonl();
    CHECK(out.find("\"g_time\":\"0\"") != std::string::npos);
    CHECK(out.find("\"kind\":\"start\"") != std::string::npos);
    CHECK(out.find("\"kind\":\"commit\"") != std::string::npos);
    CHECK(out.find("\"digest\":\"") != std::string::npos);
    // one JSON object per line
    size_t lines = 0, braces = 0;
    for (char c : out) {
        if (c == '\n') ++lines;
        if (c == '{') ++braces;
    }
    CHECK(lines == braces);
    CHECK(lines == tr.events.size());
}
