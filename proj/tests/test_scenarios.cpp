// The scenario catalog: each named construction runs end to end and every
// one of its expectations holds. A few commit values and times are asserted
// directly against the traces as well, independently of the expectation
// machinery, so a bug in the checker cannot mask a bug in a scenario.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bbl/scenarios.hpp"

using namespace bbl;

namespace {

std::map<std::string, Trace> expect_all(const Scenario& sc) {
    auto traces = run_scenario(sc);
    auto verdicts = check_expectations(sc, traces);
    REQUIRE(!verdicts.empty());
    for (const auto& v : verdicts) {
        INFO(sc.name, " ", v.check, v.detail.empty() ? "" : " -- " + v.detail);
        CHECK(v.pass);
    }
    return traces;
}

}  // namespace

TEST_CASE("catalog names and parameter validation") {
    CHECK(scenario_names().size() == 5);
    for (const auto& name : scenario_names()) {
        Scenario sc = build_scenario(name);
        CHECK(sc.name == name);
        CHECK(!sc.executions.empty());
        CHECK(!sc.expectations.empty());
    }
    CHECK_THROWS_AS(build_scenario("no-such-scenario"), ConfigError);
    CHECK_THROWS_AS(lb_async(1, 5), ConfigError);
    CHECK_THROWS_AS(lb_async(2, 6), ConfigError);   // the 3f variant is f=1 only
    CHECK_THROWS_AS(lb_psync(2, 9), ConfigError);   // n must be exactly 5f-2
    CHECK_THROWS_AS(lb_psync(1), ConfigError);
    CHECK_THROWS_AS(lb_sync_dplusd(1, 4), ConfigError); // groups would exceed f
    CHECK_THROWS_AS(lb_sync_dplusd(3, 10), ConfigError);
    CHECK_THROWS_AS(lb_sync_1p5(2, 7), ConfigError);
    CHECK_THROWS_AS(lb_dishonest(5), ConfigError);
    CHECK_THROWS_AS(lb_dishonest(6, 3), ConfigError);
    CHECK_THROWS_AS(build_scenario("LB-PSYNC", 2, 9), ConfigError);
}

TEST_CASE("split broadcaster with quorums intact carries both groups") {
    Scenario sc = lb_async(1); // n = 4
    auto traces = expect_all(sc);
    const Trace& e1 = traces.at("E1");
    for (PartyId p = 0; p < e1.n; ++p) {
        REQUIRE(e1.commit_time_of(p).has_value());
        CHECK(*e1.commit_time_of(p) == Rat(2));
    }
    // The corrupted run resolves one round later for the outvoted group.
    const Trace& e3 = traces.at("E3");
    REQUIRE(e3.commit_of(1).has_value());
    CHECK(*e3.commit_of(1) == Value::of("1"));
    CHECK(*e3.commit_time_of(1) == Rat(3));
}

TEST_CASE("split broadcaster below the quorum threshold forces disagreement") {
    Scenario sc = lb_async(1, 3);
    auto traces = expect_all(sc);
    const Trace& e3 = traces.at("E3");
    REQUIRE(e3.commit_of(1).has_value());
    REQUIRE(e3.commit_of(2).has_value());
    CHECK(*e3.commit_of(1) == Value::of("0"));
    CHECK(*e3.commit_of(2) == Value::of("1"));
    CHECK(!check_agreement(e3).empty());
}

TEST_CASE("held messages keep five worlds mutually indistinguishable") {
    Scenario sc = lb_psync(2); // n = 8
    auto traces = expect_all(sc);
    // Nobody ever commits anywhere: the construction exhausts the protocol's
    // quorum headroom at this party count.
    for (const auto& [id, tr] : traces)
        for (PartyId p = 0; p < tr.n; ++p) {
            INFO(id, " party ", p);
            CHECK(!tr.commit_of(p).has_value());
        }
}

TEST_CASE("one-Delta-one-delta wall at a third corrupt") {
    Scenario sc = lb_sync_dplusd(1, 3);
    auto traces = expect_all(sc);
    const Trace& e1 = traces.at("E1");
    REQUIRE(e1.commit_time_of(0).has_value());
    CHECK(*e1.commit_time_of(0) == Rat(12)); // Delta + delta exactly
    const Trace& e3 = traces.at("E3");
    REQUIRE(e3.commit_of(1).has_value());
    CHECK(e3.commit_of(1)->is_bottom); // three-way tie resolves to no value
    CHECK(*e3.commit_time_of(1) == Rat(90));
}

TEST_CASE("one-Delta-one-delta wall between a third and a half corrupt") {
    Scenario sc = lb_sync_dplusd(2, 5);
    auto traces = expect_all(sc);
    const Trace& e3 = traces.at("E3");
    REQUIRE(e3.commit_of(1).has_value());
    CHECK(*e3.commit_of(1) == Value::of("0")); // two locks a side outvote the spoiled slot
    CHECK(*e3.commit_time_of(1) == Rat(100));
}

TEST_CASE("skew plus tuned asymmetric delays blur two more worlds") {
    Scenario sc = lb_sync_1p5();
    auto traces = expect_all(sc);
    const Trace& e1 = traces.at("E1");
    for (PartyId p : {0, 1, 2}) {
        REQUIRE(e1.commit_time_of(p).has_value());
        CHECK(*e1.commit_time_of(p) == Rat(13)); // Delta + 1.5 delta exactly
    }
    const Trace& e2 = traces.at("E2");
    REQUIRE(e2.commit_time_of(1).has_value());
    CHECK(*e2.commit_time_of(1) == Rat(145));
    REQUIRE(e2.commit_time_of(3).has_value());
    CHECK(*e2.commit_time_of(3) == Rat(146)); // started half a delta late
}

TEST_CASE("a ring of neighbor-only relays splits an honest pair") {
    Scenario sc = lb_dishonest(6);
    auto traces = expect_all(sc);
    CHECK(sc.executions.size() == 6);
    const Trace& e4 = traces.at("E4");
    REQUIRE(e4.commit_of(3).has_value());
    REQUIRE(e4.commit_of(4).has_value());
    CHECK(*e4.commit_of(3) == Value::of("0"));
    CHECK(*e4.commit_of(4) == Value::of("1"));
    CHECK(!check_agreement(e4).empty());
    // Every other adjacent pair stays in agreement.
    for (const char* id : {"E1", "E2", "E3", "E5", "E6"})
        CHECK(check_agreement(traces.at(id)).empty());
}

TEST_CASE("generic adversary shapes across every protocol") {
    struct Pick {
        std::string id;
        int n;
        int f;
    };
    const std::vector<Pick> picks = {
        {"brb2", 4, 1},      {"brb2", 7, 2},        {"psync-vbb", 4, 1},
        {"psync-vbb", 9, 2}, {"bb-2delta", 4, 1},   {"bb-third", 3, 1},
        {"bb-syncstart", 5, 2}, {"bb-grid", 5, 2},
    };
    for (const auto& pick : picks) {
        auto suite = generic_suite(pick.id, pick.n, pick.f);
        CHECK(suite.size() == 10);
        for (const auto& sc : suite) {
            INFO(pick.id, " n=", pick.n, " f=", pick.f, " ", sc.name);
            expect_all(sc);
        }
    }
}

TEST_CASE("every leader failure ends in the recovered value") {
    for (auto [n, f] : {std::pair<int, int>{4, 1}, std::pair<int, int>{8, 2}}) {
        auto suite = leader_misbehavior_suite(n, f);
        CHECK(suite.size() == 10);
        for (const auto& sc : suite) {
            INFO("n=", n, " f=", f, " ", sc.name);
            expect_all(sc);
        }
    }
}

TEST_CASE("verdicts render deterministically and catch staged failures") {
    Scenario sc = lb_async(1);
    auto traces = run_scenario(sc);
    auto verdicts = check_expectations(sc, traces);
    REQUIRE(!verdicts.empty());
    CHECK(verdicts[0].check == "E1: parties 0,1,2,3 commit 0");
    CHECK(verdicts[1].check == "E1: parties 0,1,2,3 commit by 2");

    // A missing trace is a failing verdict, not an exception.
    std::map<std::string, Trace> partial;
    auto broken = check_expectations(sc, partial);
    REQUIRE(!broken.empty());
    CHECK(!broken[0].pass);
    CHECK(broken[0].detail == "missing trace for E1");

    // A wrong expected value produces a counterexample naming the party.
    Scenario tampered = lb_async(1);
    tampered.expectations.clear();
    tampered.expectations.push_back(commits_value("E1", {1}, Value::of("9")));
    tampered.expectations.push_back(no_commit_before("E1", {1}, Rat(5)));
    tampered.expectations.push_back(
        history_equal("E1", "E2", {1}, kNoCutoff)); // different inputs diverge
    auto bad = check_expectations(tampered, traces);
    REQUIRE(bad.size() == 3);
    CHECK(!bad[0].pass);
    CHECK(bad[0].detail == "party 1 committed 0 not 9");
    CHECK(!bad[1].pass);
    CHECK(bad[1].detail == "party 1 committed at 2");
    CHECK(!bad[2].pass);
    CHECK(bad[2].detail.find("party 1 diverges at event") == 0);
}
