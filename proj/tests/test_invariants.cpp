#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bbl/invariants.hpp"
#include "bbl/proto_sync.hpp"

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

using namespace bbl;

namespace {

const Rat D(10);  // conservative delay bound used throughout the sync runs

World psync_world(int n, int f) {
    World w;
    w.res = Resilience{n, f, Setting::PsyncFast, false};
    w.model = TimingModel::partial_synchrony(Rat(1), Rat(0));
    w.broadcaster = 0;
    for (PartyId p = 0; p < n; ++p) {
        Value in = Value::of("in" + std::to_string(p));
        w.roles.push_back(HonestRole{[in] { return std::make_unique<PsyncVbbParty>(in); }});
    }
    w.base_delay = Rat(1);
    return w;
}

template <class Party, class... Args>
World sync_world(int n, int f, Setting setting, Rat delta, Rat sigma, Value input, Args... args) {
    World w;
    w.res = Resilience{n, f, setting, false};
    w.model = TimingModel::synchrony(delta, D, sigma);
    w.broadcaster = 0;
    for (PartyId p = 0; p < n; ++p)
        w.roles.push_back(
            HonestRole{[input, args...] { return std::make_unique<Party>(input, args...); }});
    w.base_delay = delta;
    return w;
}

ByzPersonality propose_to(Value v, std::set<PartyId> audience) {
    return ByzPersonality{
        [v] { return std::make_unique<PsyncVbbParty>(v); },
        std::move(audience),
        [](PartyId, const SignedPayload&) { return false; },
    };
}

ViewScanParams psync_params(int n, int f) {
    return ViewScanParams{0, thresholds(Resilience{n, f, Setting::PsyncFast, false}), {}};
}

void check_clean(const std::vector<Violation>& vs) {
    INFO(describe(vs));
    CHECK(vs.empty());
}

// --- building blocks for hand-crafted traces ---

Trace blank_trace(int n, std::vector<bool> byz) {
    Trace tr;
    tr.n = n;
    tr.start_offsets.assign(static_cast<std::size_t>(n), Rat(0));
    tr.is_byzantine = std::move(byz);
    return tr;
}

Event send_event(int step, PartyId from, SignedPayload sp) {
    Event e;
    e.step = step;
    e.group = step;
    e.party = from;
    e.kind = EventKind::Send;
    e.payload = std::move(sp);
    return e;
}

Event commit_event(int step, int group, PartyId p, Value v) {
    Event e;
    e.step = step;
    e.group = group;
    e.party = p;
    e.kind = EventKind::Commit;
    e.value = std::move(v);
    return e;
}

Event timer_event(int step, int group, PartyId p, std::string tag) {
    Event e;
    e.step = step;
    e.group = group;
    e.party = p;
    e.kind = EventKind::TimerFire;
    e.tag = std::move(tag);
    return e;
}

SignedPayload claim_bottom(PartyId reporter, long long w) {
    Msg m;
    m.tag = Tag::ValView;
    m.value = Value::bottom();
    m.view = w;
    return make_signed(reporter, std::move(m));
}

SignedPayload claim_value(PartyId leader, PartyId reporter, const Value& v, long long w) {
    Msg m;
    m.tag = Tag::ValView;
    m.value = v;
    m.view = w;
    return countersign(reporter, make_signed(leader, std::move(m)));
}

SignedPayload vote_payload(PartyId voter, long long w, PartyId leader, const Value& v) {
    Msg m;
    m.tag = Tag::Vote;
    m.view = w;
    m.parts.push_back(claim_value(leader, voter, v, w));
    return make_signed(voter, std::move(m));
}

}  // namespace

// ---------------------------------------------------------------------------
// Clean runs uphold every guarantee the scans assert

TEST_CASE("a clean view-based run passes the commit checks and view scans") {
    World w = psync_world(4, 1);
    Trace tr = run(w, Rat(20));
    check_clean(check_agreement(tr));
    check_clean(check_all_commit(tr));
    check_clean(check_committed_input(tr, Value::of("in0")));
    check_clean(check_commits_valid(tr, [](const Value& v) { return !v.is_bottom; }));
    check_clean(scan_vote_quorum_certificates(tr, psync_params(4, 1)));
    check_clean(scan_vote_quorum_exclusivity(tr, psync_params(4, 1)));
    // The scans had a real quorum to chew on: every party endorsed the input.
    CHECK(detail::honest_view_votes(tr)[{1, Value::of("in0")}].size() == 4);
}

TEST_CASE("a larger clean view-based run passes the view scans") {
    World w = psync_world(9, 2);
    Trace tr = run(w, Rat(20));
    check_clean(check_agreement(tr));
    check_clean(check_all_commit(tr));
    check_clean(scan_vote_quorum_certificates(tr, psync_params(9, 2)));
    check_clean(scan_vote_quorum_exclusivity(tr, psync_params(9, 2)));
    CHECK(detail::honest_view_votes(tr)[{1, Value::of("in0")}].size() == 9);
}

TEST_CASE("a silent leader's replacement still passes the view scans") {
    World w = psync_world(4, 1);
    w.roles[0] = ByzScript{};
    Trace tr = run(w, Rat(20));
    check_clean(check_agreement(tr));
    check_clean(check_all_commit(tr));
    check_clean(scan_vote_quorum_certificates(tr, psync_params(4, 1)));
    check_clean(scan_vote_quorum_exclusivity(tr, psync_params(4, 1)));
}

TEST_CASE("an equivocating leader's run passes the view scans non-vacuously") {
    World w = psync_world(4, 1);
    Value a = Value::of("a");
    Value b = Value::of("b");
    ByzScript s;
    s.personalities.push_back(propose_to(a, {1}));
    s.personalities.push_back(propose_to(b, {2, 3}));
    w.roles[0] = s;
    Trace tr = run(w, Rat(20));
    check_clean(check_agreement(tr));
    check_clean(scan_vote_quorum_certificates(tr, psync_params(4, 1)));
    check_clean(scan_vote_quorum_exclusivity(tr, psync_params(4, 1)));
    // Parties 2 and 3 voted b in view 1, which meets the 3f-1 quorum bar, so
    // the scans really did assert that view 1 settled on b: the salvaged
    // certificates and all three status reports had to lock b.
    CHECK(detail::honest_view_votes(tr)[{1, b}].size() == 2);
}

TEST_CASE("clean graded-vote runs pass the fast-path scan") {
    Value v = Value::of("v");
    World w = sync_world<Bb1p5Party>(5, 2, Setting::SyncMinority, Rat(2), Rat(1), v, 5);
    w.start_offsets = {Rat(0), Rat(1), Rat(1, 2), Rat(1), Rat(0)};
    Trace tr = run(w, Rat(160));
    check_clean(check_agreement(tr));
    check_clean(check_all_commit(tr));
    check_clean(scan_fast_commit_grade_exclusion(tr));
    // All five parties took the fast path, and every wakeup tag carried a
    // parseable freshness grade for the scan to reason about.
    auto fasts = detail::fast_commits(tr, "pc:");
    REQUIRE(fasts.size() == 5);
    for (const auto& fc : fasts) CHECK(fc.grade.has_value());
}

TEST_CASE("an equivocating broadcaster leaves the graded-vote scan vacuous") {
    Value a = Value::of("a"), b = Value::of("b");
    World w = sync_world<Bb1p5Party>(5, 2, Setting::SyncMinority, Rat(1), Rat(0), a, 2);
    ByzScript split;
    split.personalities.push_back(ByzPersonality{
        [a] { return std::make_unique<Bb1p5Party>(a, 2); },
        std::set<PartyId>{0, 1, 2},
        nullptr,
    });
    split.personalities.push_back(ByzPersonality{
        [b] { return std::make_unique<Bb1p5Party>(b, 2); },
        std::set<PartyId>{0, 3, 4},
        nullptr,
    });
    w.roles[0] = split;
    Trace tr = run(w, Rat(160));
    check_clean(check_agreement(tr));
    CHECK(detail::fast_commits(tr, "pc:").empty());
    check_clean(scan_fast_commit_grade_exclusion(tr));
}

TEST_CASE("clean synchronized-start runs pass the fast-path scan") {
    Value v = Value::of("v");
    World w = sync_world<BbSyncStartParty>(5, 2, Setting::SyncMinority, Rat(3), Rat(0), v);
    Trace tr = run(w, Rat(120));
    check_clean(check_agreement(tr));
    check_clean(check_all_commit(tr));
    check_clean(scan_fast_commit_lock_agreement(tr));
    CHECK(detail::fast_commits(tr, "fc:").size() == 5);
}

// ---------------------------------------------------------------------------
// Corrupt traces trip the checks

TEST_CASE("the commit checks flag disagreement, absence, and wrong values") {
    Value a = Value::of("a"), b = Value::of("b");
    Trace tr = blank_trace(3, {false, false, false});
    tr.events.push_back(commit_event(0, 0, 0, a));
    tr.events.push_back(commit_event(1, 1, 1, b));

    auto agreement = check_agreement(tr);
    REQUIRE(agreement.size() == 1);
    CHECK(agreement[0].check == "agreement");

    auto all = check_all_commit(tr);
    REQUIRE(all.size() == 1);
    CHECK(all[0].detail == "party 2 never committed");

    auto input = check_committed_input(tr, a);
    REQUIRE(input.size() == 1);
    CHECK(input[0].check == "committed-input");

    auto valid = check_commits_valid(tr, [&](const Value& v) { return v == a; });
    REQUIRE(valid.size() == 1);
    CHECK(valid[0].check == "commit-validity");
}

TEST_CASE("a rival certificate and a lockless status trip the view scans") {
    Value a = Value::of("a"), b = Value::of("b"), c = Value::of("c");
    Trace tr = blank_trace(4, {true, false, false, false});

    // Two honest votes for a in view 1 meet the 3f-1 bar at f=1.
    tr.events.push_back(send_event(0, 1, vote_payload(1, 1, 0, a)));
    tr.events.push_back(send_event(1, 2, vote_payload(2, 1, 0, a)));

    // The faulty leader circulates a structurally valid view-1 certificate
    // locking b: two countersigned b claims plus a bottom claim.
    Msg cert;
    cert.tag = Tag::Cert;
    cert.view = 1;
    cert.parts = {claim_value(0, 2, b, 1), claim_value(0, 3, b, 1), claim_bottom(1, 1)};
    tr.events.push_back(send_event(2, 0, unsigned_container(std::move(cert))));

    // Party 3 moves to view 2 reporting only the primordial certificate.
    Msg status;
    status.tag = Tag::Status;
    status.view = 1;
    status.parts.push_back(empty_cert());
    tr.events.push_back(send_event(3, 3, make_signed(3, std::move(status))));

    // Party 3 also votes for a third value in view 2.
    tr.events.push_back(send_event(4, 3, vote_payload(3, 2, 1, c)));

    auto certs = scan_vote_quorum_certificates(tr, psync_params(4, 1));
    REQUIRE(certs.size() == 2);
    CHECK(certs[0].check == "vote-quorum-certificates");
    CHECK(certs[0].detail.find("locks b") != std::string::npos);
    CHECK(certs[1].detail.find("party 3 moved past view 1") != std::string::npos);

    auto excl = scan_vote_quorum_exclusivity(tr, psync_params(4, 1));
    REQUIRE(excl.size() == 2);
    CHECK(excl[0].detail.find("certificate locks b") != std::string::npos);
    CHECK(excl[1].detail.find("voted c in view 2") != std::string::npos);
}

TEST_CASE("a stale vote, a missing lock, and a rival lock trip the graded scan") {
    Value a = Value::of("a"), b = Value::of("b");
    Trace tr = blank_trace(3, {false, false, false});

    // Party 0 fast-commits a on a wakeup whose tag pins grade 1.
    tr.events.push_back(timer_event(0, 0, 0, "pc:1/1:0"));
    tr.events.push_back(commit_event(1, 0, 0, a));

    // Party 1 voted for b at grade 1/2, fresher than the committed grade.
    Msg prop;
    prop.tag = Tag::Propose;
    prop.value = b;
    Msg vote;
    vote.tag = Tag::Vote;
    vote.rtime = Rat(1, 2);
    vote.parts.push_back(make_signed(0, std::move(prop)));
    tr.events.push_back(send_event(2, 1, make_signed(1, std::move(vote))));

    // Party 1 then enters the fallback with nothing; party 2 enters locked
    // on b. Party 0 never reaches its fallback wakeup and is skipped.
    tr.events.push_back(timer_event(3, 3, 1, "ba:start"));
    tr.events.push_back(timer_event(4, 4, 2, "ba:start"));
    Msg ba;
    ba.tag = Tag::BaVal;
    ba.view = 2;
    ba.value = b;
    tr.events.push_back(send_event(5, 2, make_signed(2, std::move(ba))));

    auto vs = scan_fast_commit_grade_exclusion(tr);
    REQUIRE(vs.size() == 3);
    CHECK(vs[0].detail.find("voted b at grade 1/2") != std::string::npos);
    CHECK(vs[1].detail.find("party 1 entered the fallback with no lock") != std::string::npos);
    CHECK(vs[2].detail.find("party 2 entered the fallback locked on b") != std::string::npos);
}

TEST_CASE("disagreeing fast commits trip the lock-agreement scan") {
    Value a = Value::of("a"), b = Value::of("b");
    Trace tr = blank_trace(2, {false, false});
    tr.events.push_back(timer_event(0, 0, 0, "fc:0"));
    tr.events.push_back(commit_event(1, 0, 0, a));
    tr.events.push_back(timer_event(2, 2, 1, "fc:1"));
    tr.events.push_back(commit_event(3, 2, 1, b));

    auto vs = scan_fast_commit_lock_agreement(tr);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].check == "fast-commit-lock-agreement");
    CHECK(vs[0].detail.find("fast-committed b") != std::string::npos);
}
