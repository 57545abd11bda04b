#pragma once

// Command-line front end. Four subcommands:
//   run      --config c.json [--override-resilience] [--m K] [--horizon R] [--out P]
//   scenario --name NAME [--f K] [--out P]
//   table    --suite table1 [--out P]
//   trace    --in t.jsonl --party I [--until R]
// Exit codes: 0 when every check and bound holds, 1 when any fails, 2 for
// configuration problems.

#include "bbl/harness.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>
#include <vector>

namespace bbl {

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"deterministic broadcast-protocol simulator and latency harness"};
    app.require_subcommand(1);

    auto* run_cmd =
        app.add_subcommand("run", "execute one configured world, report latency or verdicts");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "JSON run configuration")->required();
    bool override_res = false;
    run_cmd->add_flag("--override-resilience", override_res,
                      "permit resilience outside the admissible region");
    int m_override = 0;
    auto* m_opt = run_cmd->add_option("--m", m_override, "vote grid override (bb-grid only)");
    std::string horizon_override;
    auto* hz_opt = run_cmd->add_option("--horizon", horizon_override, "horizon override, rational");
    std::string run_out;
    run_cmd->add_option("--out", run_out, "write the report here as well");

    auto* sc_cmd = app.add_subcommand("scenario", "build, run, and check a named scenario");
    std::string sc_name;
    sc_cmd->add_option("--name", sc_name, "scenario name, e.g. LB-ASYNC")->required();
    int sc_f = 0;
    auto* f_opt = sc_cmd->add_option("--f", sc_f, "fault budget override");
    std::string sc_out;
    sc_cmd->add_option("--out", sc_out, "write the verdict lines here as well");

    auto* tb_cmd = app.add_subcommand("table", "emit the results table as CSV");
    std::string suite;
    tb_cmd->add_option("--suite", suite, "suite name: table1")->required();
    std::string tb_out;
    tb_cmd->add_option("--out", tb_out, "write the CSV here as well");

    auto* tr_cmd =
        app.add_subcommand("trace", "print one party's local history from a JSONL trace");
    std::string tr_in;
    tr_cmd->add_option("--in", tr_in, "JSONL trace file")->required();
    int tr_party = 0;
    tr_cmd->add_option("--party", tr_party, "party id")->required();
    std::string tr_until;
    tr_cmd->add_option("--until", tr_until, "local-time cutoff, rational (default: none)");

    std::vector<const char*> argv;
    argv.push_back("bbl");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (run_cmd->parsed()) {
            RunConfig cfg = RunConfig::from_file(config_path);
            if (override_res) cfg.override_resilience = true;
            if (m_opt->count() > 0) cfg.grid_m = m_override;
            if (hz_opt->count() > 0) cfg.horizon = parse_rat(horizon_override);
            if (!run_out.empty()) cfg.report_out = run_out;
            if (cfg.grid_m && (!cfg.protocol || *cfg.protocol != "bb-grid"))
                throw ConfigError("\"m\" applies only to protocol bb-grid");
            return execute_run(cfg, out);
        }
        if (sc_cmd->parsed()) {
            std::optional<int> f;
            if (f_opt->count() > 0) f = sc_f;
            ScenarioOutcome oc = run_scenario_checked(build_scenario(sc_name, f));
            std::string text = render_verdicts(oc);
            out << text;
            if (!sc_out.empty()) detail::write_file(sc_out, text);
            return oc.pass ? 0 : 1;
        }
        if (tb_cmd->parsed()) {
            if (suite != "table1") throw ConfigError("unknown suite: " + suite);
            std::vector<TableRow> rows = table1_rows();
            std::string csv = render_csv(rows);
            out << csv;
            if (!tb_out.empty()) detail::write_file(tb_out, csv);
            for (const auto& r : rows)
                if (!r.pass) return 1;
            return 0;
        }
        if (tr_cmd->parsed()) {
            std::ifstream in(tr_in);
            if (!in) throw ConfigError("cannot read trace file: " + tr_in);
            std::ostringstream ss;
            ss << in.rdbuf();
            Rat until = tr_until.empty() ? kNoCutoff : parse_rat(tr_until);
            out << render_local_history(ss.str(), tr_party, until);
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SimError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace bbl
