#pragma once

// CLI-facing layer: JSON run configuration, good-case latency measurement,
// the desk-scale results table, scenario verdict rendering, and local-history
// printing for recorded traces. Everything here is deterministic end to end;
// repeated invocations produce byte-identical CSV, JSON, and verdict text.

#include "bbl/scenarios.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bbl {

// ---------------------------------------------------------------------------
// Protocol catalog
//
// Everything the harness needs to stage a protocol at an arbitrary timing
// configuration: its admissible region, party factory, and how its results
// are labeled in reports.

struct ProtocolKit {
    std::string id;
    Setting setting;
    std::string problem;     // reliable broadcast, validated, or full: BRB/VBB/BB
    std::string model_name;  // async | psync | sync
    TimingModel::Kind kind;
    // (input, grid) -> party; grid is meaningful to the graded-vote protocol
    // only and ignored by the rest.
    std::function<std::unique_ptr<IParty>(Value, int)> make;
};

inline const ProtocolKit& protocol_kit(const std::string& id) {
    static const std::vector<ProtocolKit> kits = [] {
        std::vector<ProtocolKit> v;
        v.push_back({"brb2", Setting::AsyncBrb, "BRB", "async", TimingModel::Kind::Asynchrony,
                     [](Value in, int) { return std::make_unique<Brb2Party>(std::move(in)); }});
        v.push_back({"psync-vbb", Setting::PsyncFast, "VBB", "psync",
                     TimingModel::Kind::PartialSynchrony,
                     [](Value in, int) { return std::make_unique<PsyncVbbParty>(std::move(in)); }});
        v.push_back({"bb-2delta", Setting::SyncThird, "BB", "sync", TimingModel::Kind::Synchrony,
                     [](Value in, int) { return std::make_unique<Bb2DeltaParty>(std::move(in)); }});
        v.push_back({"bb-third", Setting::SyncEqThird, "BB", "sync", TimingModel::Kind::Synchrony,
                     [](Value in, int) { return std::make_unique<BbThirdParty>(std::move(in)); }});
        v.push_back({"bb-syncstart", Setting::SyncMinority, "BB", "sync",
                     TimingModel::Kind::Synchrony,
                     [](Value in, int) { return std::make_unique<BbSyncStartParty>(std::move(in)); }});
        v.push_back({"bb-grid", Setting::SyncMinority, "BB", "sync", TimingModel::Kind::Synchrony,
                     [](Value in, int m) { return std::make_unique<Bb1p5Party>(std::move(in), m); }});
        return v;
    }();
    for (const auto& k : kits)
        if (k.id == id) return k;
    throw ConfigError("unknown protocol id: " + id);
}

// ---------------------------------------------------------------------------
// Latency measurement

struct LatencyReport {
    Rat last_commit{0};          // global time of the latest honest commit
    std::optional<Rat> latency;  // normalized per model; absent when the
                                 // round convention is not met
    std::string unit;            // "rounds" or "time"
    Rat bound{0};                // the formula value the run is held to
    bool pass = false;
    std::string note;  // why latency is absent, empty otherwise
};

namespace detail {

inline Rat broadcaster_start(const Trace& tr, PartyId broadcaster) {
    for (const auto& e : tr.events)
        if (e.kind == EventKind::Start && e.party == broadcaster) return e.g_time;
    throw SimError("trace has no start event for the broadcaster");
}

}  // namespace detail

// The good-case figure of a finished run: every honest party must have
// committed before the horizon (else the run is incomplete and this throws),
// and the latest of those commits is normalized by the model's own yardstick:
// elapsed time since the broadcaster started under synchrony, elapsed time
// over Delta under partial synchrony, and the trace's round assignment under
// asynchrony. Partial-synchrony rounds are only meaningful when the run was
// configured with every delay exactly Delta and stabilization at time zero;
// otherwise the latency field stays empty and the report fails the bound.
inline LatencyReport measure_good_case(const Trace& tr, const World& w, const Rat& horizon,
                                       const Rat& bound) {
    if (w.byzantine(w.broadcaster))
        throw ConfigError("good-case measurement requires an honest broadcaster");
    LatencyReport rep;
    rep.bound = bound;
    bool any = false;
    for (PartyId p = 0; p < tr.n; ++p) {
        if (tr.is_byzantine[p]) continue;
        auto t = tr.commit_time_of(p);
        if (!t || !(*t < horizon))
            throw SimError("incomplete run: party " + std::to_string(p) +
                           " has no commit before the horizon");
        if (!any || *t > rep.last_commit) rep.last_commit = *t;
        any = true;
    }
    if (!any) throw SimError("incomplete run: no honest parties");

    switch (w.model.kind) {
        case TimingModel::Kind::Synchrony:
            rep.unit = "time";
            rep.latency = rep.last_commit - detail::broadcaster_start(tr, w.broadcaster);
            break;
        case TimingModel::Kind::PartialSynchrony: {
            rep.unit = "rounds";
            bool uniform = !w.delay_policy && w.base_delay == w.model.Delta;
            if (uniform && w.model.gst == Rat(0)) {
                rep.latency =
                    (rep.last_commit - detail::broadcaster_start(tr, w.broadcaster)) / w.model.Delta;
            } else {
                rep.note = "rounds are defined only when every delay is configured to Delta "
                           "and stabilization is at time zero";
            }
            break;
        }
        case TimingModel::Kind::Asynchrony: {
            rep.unit = "rounds";
            RoundAssignment ra = assign_async_rounds(tr);
            int worst = 0;
            for (const auto& e : tr.events)
                if (e.kind == EventKind::Commit && !tr.is_byzantine[e.party])
                    worst = std::max(worst, ra.of_event(e));
            rep.latency = Rat(worst);
            break;
        }
    }
    rep.pass = rep.latency && *rep.latency <= bound;
    return rep;
}

// ---------------------------------------------------------------------------
// Good-case runs

// The latency formula each protocol is held to, in its model's unit. The
// graded-vote protocol owes the sharp figure only when the actual delay sits
// on its vote grid (delta a multiple of Delta/m); off the grid the window
// rounds up by at most half a grid step.
inline Rat good_case_bound(const std::string& protocol, const TimingModel& m, int grid_m) {
    if (protocol == "brb2" || protocol == "psync-vbb") return Rat(2);
    if (protocol == "bb-2delta") return m.delta * 2;
    if (protocol == "bb-third" || protocol == "bb-syncstart") return m.Delta + m.delta;
    if (protocol == "bb-grid") {
        Rat sharp = m.Delta + m.delta * Rat(3, 2);
        Rat steps = m.delta * grid_m / m.Delta;
        if (steps.denominator() == 1) return sharp;
        return sharp + m.Delta / (2 * grid_m);
    }
    throw ConfigError("unknown protocol id: " + protocol);
}

// When the fallback agreement of the synchronous protocols kicks in relative
// to their start, as a multiple of Delta.
inline Rat fallback_start(const std::string& protocol, const TimingModel& m) {
    if (protocol == "bb-2delta" || protocol == "bb-third") return m.Delta * 5;
    if (protocol == "bb-syncstart") return m.Delta * 4;
    if (protocol == "bb-grid") return m.Delta * Rat(17, 2);
    throw ConfigError("protocol has no fallback phase: " + protocol);
}

// Covers the whole run with slack: the synchronous protocols end at their
// fallback decision, the others within a few hops of the commit.
inline Rat default_horizon(const std::string& protocol, const TimingModel& m, int f,
                           const Rat& base_delay) {
    switch (m.kind) {
        case TimingModel::Kind::Asynchrony: return base_delay * 12;
        case TimingModel::Kind::PartialSynchrony: return m.Delta * 6;
        case TimingModel::Kind::Synchrony:
            return fallback_start(protocol, m) + m.Delta * 2 * (f + 1) + m.Delta * 2;
    }
    throw ConfigError("unreachable");
}

// Adversarial-but-fair delivery orders for the asynchronous runs: every
// message delay is drawn from the 64 rationals 1 + k/64 in [1, 2) by a
// seed-keyed integer mix of (from, to, per-sender sequence), so schedules
// vary with the seed yet stay deterministic across platforms.
inline DelayPolicy sampled_delay_policy(std::uint64_t seed) {
    return [seed](const SendMeta& sm) -> std::optional<Rat> {
        std::uint64_t x = seed;
        auto mix = [&x](std::uint64_t v) {
            x ^= v + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
            x *= 0xbf58476d1ce4e5b9ULL;
            x ^= x >> 27;
        };
        mix(static_cast<std::uint64_t>(sm.from) + 1);
        mix(static_cast<std::uint64_t>(sm.to) + 1);
        mix(static_cast<std::uint64_t>(sm.seq) + 1);
        return Rat(64 + static_cast<long long>(x % 64), 64);
    };
}

struct GoodCaseSpec {
    std::string protocol;
    int n = 0;
    int f = 0;
    TimingModel model;  // fully resolved
    int grid_m = 5;
    Rat base_delay{1};               // uniform delay for asynchrony
    DelayPolicy delay_policy;        // overrides base_delay when set
    std::vector<Rat> start_offsets;  // empty means all zero
    std::optional<Rat> horizon;
    bool override_resilience = false;
    Value input = Value::of("0");
    // Distinct from the broadcaster's input so a run that commits a
    // follower's value is caught, not masked.
    Value follower_input = Value::of("z");
};

struct GoodCaseRun {
    World world;
    Rat horizon{0};
    Trace trace;
    LatencyReport report;
};

inline GoodCaseRun run_good_case(const GoodCaseSpec& spec) {
    const ProtocolKit& kit = protocol_kit(spec.protocol);
    if (kit.kind != spec.model.kind)
        throw ConfigError("protocol " + spec.protocol + " expects a " + kit.model_name + " model");
    GoodCaseRun out;
    World& w = out.world;
    w.res = Resilience{spec.n, spec.f, kit.setting, spec.override_resilience};
    w.model = spec.model;
    w.broadcaster = 0;
    for (PartyId p = 0; p < spec.n; ++p) {
        Value in = p == w.broadcaster ? spec.input : spec.follower_input;
        w.roles.push_back(HonestRole{[make = kit.make, in, m = spec.grid_m] { return make(in, m); }});
    }
    w.start_offsets = spec.start_offsets;
    w.delay_policy = spec.delay_policy;
    switch (spec.model.kind) {
        case TimingModel::Kind::Asynchrony: w.base_delay = spec.base_delay; break;
        case TimingModel::Kind::PartialSynchrony: w.base_delay = spec.model.Delta; break;
        case TimingModel::Kind::Synchrony: w.base_delay = spec.model.delta; break;
    }
    out.horizon =
        spec.horizon.value_or(default_horizon(spec.protocol, spec.model, spec.f, spec.base_delay));
    out.trace = run(w, out.horizon);
    Rat bound = good_case_bound(spec.protocol, spec.model, spec.grid_m);
    out.report = measure_good_case(out.trace, w, out.horizon, bound);
    return out;
}

// ---------------------------------------------------------------------------
// The results table
//
// One row per protocol configuration; the resilience cell carries the whole
// configuration inline (D for the known bound, d for the actual delay, s for
// the true start skew, m for the vote grid) so a row reads on its own.

struct TableRow {
    std::string problem;
    std::string model;
    std::string resilience;
    Rat measured{0};
    Rat bound{0};
    bool pass = false;
};

namespace detail {

inline TableRow table_row(const GoodCaseSpec& spec, const std::string& cite_extra) {
    GoodCaseRun run = run_good_case(spec);
    const ProtocolKit& kit = protocol_kit(spec.protocol);
    TableRow row;
    row.problem = kit.problem;
    row.model = kit.model_name;
    row.resilience =
        "n=" + std::to_string(spec.n) + " f=" + std::to_string(spec.f) + cite_extra;
    if (!run.report.latency) throw SimError("table row lost its latency: " + spec.protocol);
    row.measured = *run.report.latency;
    row.bound = run.report.bound;
    row.pass = run.report.pass;
    return row;
}

}  // namespace detail

inline std::vector<TableRow> table1_rows() {
    std::vector<TableRow> rows;
    auto async_spec = [](int n, int f) {
        GoodCaseSpec s;
        s.protocol = "brb2";
        s.n = n;
        s.f = f;
        s.model = TimingModel::asynchrony();
        return s;
    };
    rows.push_back(detail::table_row(async_spec(4, 1), ""));
    rows.push_back(detail::table_row(async_spec(7, 2), ""));

    auto psync_spec = [](int n, int f) {
        GoodCaseSpec s;
        s.protocol = "psync-vbb";
        s.n = n;
        s.f = f;
        s.model = TimingModel::partial_synchrony(Rat(1), Rat(0));
        return s;
    };
    rows.push_back(detail::table_row(psync_spec(4, 1), ""));
    rows.push_back(detail::table_row(psync_spec(9, 2), ""));

    auto sync_spec = [](const std::string& id, int n, int f, Rat sigma) {
        GoodCaseSpec s;
        s.protocol = id;
        s.n = n;
        s.f = f;
        s.model = TimingModel::synchrony(Rat(2), Rat(10), sigma);
        return s;
    };
    rows.push_back(detail::table_row(sync_spec("bb-2delta", 4, 1, Rat(0)), " D=10 d=2"));
    rows.push_back(detail::table_row(sync_spec("bb-third", 3, 1, Rat(0)), " D=10 d=2"));
    rows.push_back(detail::table_row(sync_spec("bb-syncstart", 5, 2, Rat(0)), " D=10 d=2 s=0"));
    GoodCaseSpec grid = sync_spec("bb-grid", 5, 2, Rat(1));
    grid.start_offsets = {Rat(0), Rat(1), Rat(0), Rat(0), Rat(0)};
    rows.push_back(detail::table_row(grid, " D=10 d=2 s=1 m=5"));
    return rows;
}

inline std::string render_csv(const std::vector<TableRow>& rows) {
    std::string out = "problem,model,resilience,measured,bound,pass\n";
    for (const auto& r : rows) {
        out += r.problem + "," + r.model + "," + r.resilience + "," + format_rat(r.measured) +
               "," + format_rat(r.bound) + "," + (r.pass ? "pass" : "fail") + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenario verdict rendering

struct ScenarioOutcome {
    Scenario scenario;
    std::map<std::string, Trace> traces;
    std::vector<Verdict> verdicts;
    bool pass = false;
};

inline ScenarioOutcome run_scenario_checked(Scenario sc) {
    ScenarioOutcome out;
    out.traces = run_scenario(sc);
    out.verdicts = check_expectations(sc, out.traces);
    out.pass = all_passed(out.verdicts);
    out.scenario = std::move(sc);
    return out;
}

inline std::string render_verdicts(const ScenarioOutcome& oc) {
    std::string out = oc.scenario.name + ": " + std::to_string(oc.scenario.executions.size()) +
                      " executions, " + std::to_string(oc.verdicts.size()) + " checks\n";
    int failed = 0;
    for (const auto& v : oc.verdicts) {
        if (v.pass) {
            out += "pass " + v.check + "\n";
        } else {
            out += "FAIL " + v.check + " -- " + v.detail + "\n";
            ++failed;
        }
    }
    out += oc.scenario.name + ": " +
           (failed == 0 ? "all checks pass" : std::to_string(failed) + " checks FAIL") + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::optional<std::string> protocol;
    std::optional<int> n;
    std::optional<int> f;
    std::optional<Rat> delta;
    std::optional<Rat> Delta;
    std::optional<Rat> sigma;
    std::optional<Rat> gst;
    std::optional<Rat> horizon;
    std::vector<Rat> start_offsets;
    bool broadcaster_honest = true;
    std::optional<std::string> adversary;  // one of the generic shapes
    std::optional<std::string> scenario;   // one of the named catalogs
    std::optional<int> grid_m;
    bool override_resilience = false;
    std::string report_out;
    std::string trace_out;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
};

namespace detail {

inline Rat rat_field(const nlohmann::json& v, const std::string& key) {
    try {
        if (v.is_string()) return parse_rat(v.get<std::string>());
        if (v.is_number_integer()) return Rat(v.get<long long>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config field \"" + key + "\": " + e.what());
    }
    throw ConfigError("config field \"" + key +
                      "\" must be a rational string like \"3/2\" or an integer");
}

inline int int_field(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer())
        throw ConfigError("config field \"" + key + "\" must be an integer");
    return v.get<int>();
}

inline bool bool_field(const nlohmann::json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("config field \"" + key + "\" must be a boolean");
    return v.get<bool>();
}

inline std::string string_field(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config field \"" + key + "\" must be a string");
    return v.get<std::string>();
}

}  // namespace detail

inline RunConfig RunConfig::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    for (const auto& [key, v] : doc.items()) {
        if (key == "protocol") c.protocol = detail::string_field(v, key);
        else if (key == "n") c.n = detail::int_field(v, key);
        else if (key == "f") c.f = detail::int_field(v, key);
        else if (key == "delta") c.delta = detail::rat_field(v, key);
        else if (key == "Delta") c.Delta = detail::rat_field(v, key);
        else if (key == "sigma") c.sigma = detail::rat_field(v, key);
        else if (key == "gst") c.gst = detail::rat_field(v, key);
        else if (key == "horizon") c.horizon = detail::rat_field(v, key);
        else if (key == "start_offsets") {
            if (!v.is_array())
                throw ConfigError("config field \"start_offsets\" must be an array");
            for (const auto& o : v) c.start_offsets.push_back(detail::rat_field(o, key));
        } else if (key == "broadcaster_honest") c.broadcaster_honest = detail::bool_field(v, key);
        else if (key == "adversary") c.adversary = detail::string_field(v, key);
        else if (key == "scenario") c.scenario = detail::string_field(v, key);
        else if (key == "m") c.grid_m = detail::int_field(v, key);
        else if (key == "override_resilience") c.override_resilience = detail::bool_field(v, key);
        else if (key == "seedless") {
            if (!detail::bool_field(v, key))
                throw ConfigError("all runs are deterministic; \"seedless\" cannot be false");
        } else if (key == "report_out") c.report_out = detail::string_field(v, key);
        else if (key == "trace_out") c.trace_out = detail::string_field(v, key);
        else throw ConfigError("unknown config field: \"" + key + "\"");
    }
    if (c.scenario && c.adversary)
        throw ConfigError("config sets both \"scenario\" and \"adversary\"; pick one");
    if (c.scenario && c.protocol)
        throw ConfigError("\"scenario\" names a fixed catalog entry; \"protocol\" does not apply");
    if (!c.scenario) {
        if (!c.protocol) throw ConfigError("config requires \"protocol\"");
        if (!c.n || !c.f) throw ConfigError("config requires \"n\" and \"f\"");
    }
    if (c.grid_m && (!c.protocol || *c.protocol != "bb-grid"))
        throw ConfigError("\"m\" applies only to protocol bb-grid");
    return c;
}

inline RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// Run execution

namespace detail {

inline void reject_timing_fields(const RunConfig& c, const std::string& why) {
    auto bad = [&](bool set, const char* name) {
        if (set) throw ConfigError(std::string("\"") + name + "\" does not apply: " + why);
    };
    bad(c.delta.has_value(), "delta");
    bad(c.Delta.has_value(), "Delta");
    bad(c.sigma.has_value(), "sigma");
    bad(c.gst.has_value(), "gst");
    bad(!c.start_offsets.empty(), "start_offsets");
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

inline nlohmann::ordered_json verdicts_json(const ScenarioOutcome& oc) {
    nlohmann::ordered_json j;
    j["scenario"] = oc.scenario.name;
    j["executions"] = oc.scenario.executions.size();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& v : oc.verdicts) {
        nlohmann::ordered_json e;
        e["check"] = v.check;
        e["pass"] = v.pass;
        if (!v.pass) e["detail"] = v.detail;
        arr.push_back(std::move(e));
    }
    j["verdicts"] = std::move(arr);
    j["pass"] = oc.pass;
    return j;
}

inline int emit_scenario_outcome(const ScenarioOutcome& oc, const RunConfig& cfg,
                                 std::ostream& out) {
    out << render_verdicts(oc);
    if (!cfg.report_out.empty()) write_file(cfg.report_out, verdicts_json(oc).dump(2) + "\n");
    if (!cfg.trace_out.empty()) {
        if (oc.scenario.executions.size() != 1)
            throw ConfigError("\"trace_out\" applies to single-execution runs; scenario " +
                              oc.scenario.name + " has " +
                              std::to_string(oc.scenario.executions.size()));
        write_file(cfg.trace_out, oc.traces.begin()->second.to_jsonl());
    }
    return oc.pass ? 0 : 1;
}

}  // namespace detail

// Executes one configured run and prints its report. Exit code 0 when every
// check and bound holds, 1 when any fails; configuration problems throw.
inline int execute_run(const RunConfig& cfg, std::ostream& out) {
    if (cfg.scenario) {
        detail::reject_timing_fields(cfg, "scenarios stage their own timing");
        if (cfg.horizon) throw ConfigError("\"horizon\" does not apply: scenarios stage their own");
        ScenarioOutcome oc = run_scenario_checked(build_scenario(*cfg.scenario, cfg.f, cfg.n));
        return detail::emit_scenario_outcome(oc, cfg, out);
    }
    if (cfg.adversary) {
        detail::reject_timing_fields(cfg, "adversary shapes fix their timing model");
        if (cfg.horizon) throw ConfigError("\"horizon\" does not apply to adversary shapes");
        std::vector<Scenario> suite = generic_suite(*cfg.protocol, *cfg.n, *cfg.f);
        const Scenario* found = nullptr;
        std::string want = *cfg.adversary;
        if (want.rfind("gen-", 0) != 0) want = "gen-" + want;
        for (const auto& sc : suite)
            if (sc.name == want) found = &sc;
        if (!found) {
            std::string names;
            for (const auto& sc : suite) names += (names.empty() ? "" : ", ") + sc.name;
            throw ConfigError("unknown adversary \"" + *cfg.adversary + "\"; shapes: " + names);
        }
        bool corrupts_broadcaster = found->executions[0].world.byzantine(0);
        if (cfg.broadcaster_honest && corrupts_broadcaster)
            throw ConfigError("adversary " + found->name +
                              " corrupts the broadcaster; set \"broadcaster_honest\": false");
        if (!cfg.broadcaster_honest && !corrupts_broadcaster)
            throw ConfigError("adversary " + found->name + " leaves the broadcaster honest");
        ScenarioOutcome oc = run_scenario_checked(*found);
        return detail::emit_scenario_outcome(oc, cfg, out);
    }

    if (!cfg.broadcaster_honest)
        throw ConfigError("a corrupt broadcaster needs an \"adversary\" shape or a \"scenario\"");
    GoodCaseSpec spec;
    spec.protocol = *cfg.protocol;
    spec.n = *cfg.n;
    spec.f = *cfg.f;
    spec.grid_m = cfg.grid_m.value_or(5);
    spec.start_offsets = cfg.start_offsets;
    spec.horizon = cfg.horizon;
    spec.override_resilience = cfg.override_resilience;
    const ProtocolKit& kit = protocol_kit(spec.protocol);
    auto reject = [&](bool set, const char* name) {
        if (set)
            throw ConfigError(std::string("\"") + name + "\" does not apply to a " +
                              kit.model_name + " protocol");
    };
    switch (kit.kind) {
        case TimingModel::Kind::Asynchrony:
            reject(cfg.Delta.has_value(), "Delta");
            reject(cfg.sigma.has_value(), "sigma");
            reject(cfg.gst.has_value(), "gst");
            spec.model = TimingModel::asynchrony();
            spec.base_delay = cfg.delta.value_or(Rat(1));
            if (spec.base_delay <= Rat(0)) throw ConfigError("\"delta\" must be positive");
            break;
        case TimingModel::Kind::PartialSynchrony:
            reject(cfg.delta.has_value(), "delta");
            reject(cfg.sigma.has_value(), "sigma");
            spec.model =
                TimingModel::partial_synchrony(cfg.Delta.value_or(Rat(1)), cfg.gst.value_or(Rat(0)));
            break;
        case TimingModel::Kind::Synchrony:
            reject(cfg.gst.has_value(), "gst");
            spec.model = TimingModel::synchrony(cfg.delta.value_or(Rat(2)),
                                                cfg.Delta.value_or(Rat(10)),
                                                cfg.sigma.value_or(Rat(0)));
            break;
    }
    GoodCaseRun run = run_good_case(spec);
    nlohmann::ordered_json j;
    j["protocol"] = spec.protocol;
    j["n"] = spec.n;
    j["f"] = spec.f;
    j["model"] = kit.model_name;
    j["bound"] = format_rat(run.report.bound);
    j["last_commit_g_time"] = format_rat(run.report.last_commit);
    if (run.report.latency) {
        j["latency"] = format_rat(*run.report.latency);
    } else {
        j["latency"] = nullptr;
        j["note"] = run.report.note;
    }
    j["latency_unit"] = run.report.unit;
    j["pass"] = run.report.pass;
    std::string text = j.dump(2) + "\n";
    out << text;
    if (!cfg.report_out.empty()) detail::write_file(cfg.report_out, text);
    if (!cfg.trace_out.empty()) detail::write_file(cfg.trace_out, run.trace.to_jsonl());
    return run.report.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Local-history printing from a recorded JSONL trace

inline std::string render_local_history(const std::string& jsonl, PartyId party,
                                        const Rat& until) {
    std::string out;
    std::istringstream in(jsonl);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json e;
        try {
            e = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& err) {
            throw ConfigError("trace line " + std::to_string(lineno) + ": " + err.what());
        }
        try {
            if (e.at("party").get<int>() != party) continue;
            Rat l = parse_rat(e.at("l_time").get<std::string>());
            if (!(l < until)) continue;
            std::string kind = e.at("kind").get<std::string>();
            out += "l=" + format_rat(l) + " " + kind;
            if (kind == "send")
                out += " to " + std::to_string(e.at("peer").get<int>()) + " digest " +
                       e.at("digest").get<std::string>();
            else if (kind == "deliver")
                out += " from " + std::to_string(e.at("peer").get<int>()) + " digest " +
                       e.at("digest").get<std::string>();
            else if (kind == "timer")
                out += " " + e.at("tag").get<std::string>();
            else if (kind == "commit")
                out += " " + (e.at("value").is_null() ? std::string("(bottom)")
                                                      : e.at("value").get<std::string>());
            out += "\n";
        } catch (const nlohmann::json::exception& err) {
            throw ConfigError("trace line " + std::to_string(lineno) + ": " + err.what());
        } catch (const std::invalid_argument& err) {
            throw ConfigError("trace line " + std::to_string(lineno) + ": " + err.what());
        }
    }
    return out;
}

}  // namespace bbl
