// Command-line front end for the fan-mobility measurement pipeline.
//
// Subcommands: ingest | panel | states | network | metrics | stats | synth |
// report. Flags override config-file keys, which override defaults.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "fanflow/pipeline.hpp"

namespace {

std::optional<fanflow::MonthKey> parse_month_flag(const std::string& s, const std::string& name) {
    if (s.empty()) return std::nullopt;
    auto m = fanflow::MonthKey::parse(s);
    if (!m) throw CLI::ValidationError(name, "expected YYYY-MM, got '" + s + "'");
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fanflow: fan commitment, state flows, and audience-overlap networks "
                 "from live-chat event logs"};
    app.set_config("--config", "", "plain-text key = value configuration file");

    std::string events, roster, out = "out", from, to, format = "csv", origin_months;
    std::string retention_horizons = "2,3";
    fanflow::RunConfig cfg;
    uint32_t synth_months = 6;

    app.add_option("--events", events, "event log path (.csv or .jsonl)");
    app.add_option("--roster", roster, "creator roster path (.csv)");
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--from", from, "window start month (YYYY-MM)");
    app.add_option("--to", to, "window end month (YYYY-MM)");
    app.add_option("--theta", cfg.overlap.theta, "Simpson similarity threshold")
        ->capture_default_str();
    app.add_option("--n-min", cfg.overlap.n_min, "minimum shared viewers per edge")
        ->capture_default_str();
    app.add_option("--tau-u", cfg.overlap.tau_u, "minimum unique chatters per node")
        ->capture_default_str();
    app.add_option("--horizon", cfg.state_horizon, "state-flow horizon in months")
        ->capture_default_str();
    app.add_option("--retention-horizons", retention_horizons, "comma-separated k values")
        ->capture_default_str();
    app.add_option("--origin-months", origin_months,
                   "comma-separated YYYY-MM origin cohort months (default: all evaluable)");
    app.add_option("--seed", cfg.seed, "random seed (synth)")->capture_default_str();
    app.add_option("--threads", cfg.threads, "worker threads; results are identical for any value")
        ->capture_default_str();
    app.add_option("--format", format, "event/table output format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    app.add_flag("--unified-unthresholded", cfg.unified_unthresholded,
                 "sum unthresholded Simpson weights in the unified graph");

    // Synthetic corpus parameters.
    app.add_option("--months", synth_months, "synth: number of months")->capture_default_str();
    auto add_segment = [&](const char* prefix, fanflow::SegmentParams& s) {
        std::string p(prefix);
        app.add_option("--" + p + "-creators", s.creators)->capture_default_str();
        app.add_option("--" + p + "-fans", s.fans)->capture_default_str();
        app.add_option("--" + p + "-activity", s.activity)->capture_default_str();
        app.add_option("--" + p + "-switch", s.switch_within)->capture_default_str();
        app.add_option("--" + p + "-leak", s.cross_leak)->capture_default_str();
        app.add_option("--" + p + "-drop", s.drop)->capture_default_str();
        app.add_option("--" + p + "-recapture", s.recapture)->capture_default_str();
        app.add_option("--" + p + "-msg-p", s.msg_geom_p)->capture_default_str();
        app.add_option("--" + p + "-cochat", s.cochat_prob)->capture_default_str();
        app.add_option("--" + p + "-cochat-radius", s.cochat_radius)->capture_default_str();
    };
    add_segment("agency", cfg.synth.agency);
    add_segment("independent", cfg.synth.independent);

    app.require_subcommand(1);
    for (const char* name : {"ingest", "panel", "states", "network", "metrics", "stats", "synth",
                             "report"})
        app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.events_path = events;
        cfg.roster_path = roster;
        cfg.out_dir = out;
        cfg.from = parse_month_flag(from, "--from");
        cfg.to = parse_month_flag(to, "--to");
        cfg.format = format == "json" ? fanflow::OutputFormat::Json : fanflow::OutputFormat::Csv;

        cfg.retention_horizons.clear();
        for (const std::string& tok : CLI::detail::split(retention_horizons, ','))
            if (!tok.empty()) cfg.retention_horizons.push_back(std::stoi(tok));
        cfg.origin_months.clear();
        for (const std::string& tok : CLI::detail::split(origin_months, ',')) {
            if (tok.empty()) continue;
            auto m = fanflow::MonthKey::parse(tok);
            if (!m) throw fanflow::ConfigError("--origin-months: bad month '" + tok + "'");
            cfg.origin_months.push_back(*m);
        }
        cfg.synth.months = synth_months;
        cfg.synth.seed = cfg.seed;

        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub != "synth") {
            if (events.empty()) throw fanflow::ConfigError("--events is required");
            if (roster.empty()) throw fanflow::ConfigError("--roster is required");
        }

        std::vector<std::string> written;
        if (sub == "ingest")
            written = fanflow::run_ingest(cfg);
        else if (sub == "panel")
            written = fanflow::run_panel(cfg);
        else if (sub == "states")
            written = fanflow::run_states(cfg);
        else if (sub == "network")
            written = fanflow::run_network(cfg);
        else if (sub == "metrics")
            written = fanflow::run_metrics(cfg);
        else if (sub == "stats")
            written = fanflow::run_stats(cfg);
        else if (sub == "synth")
            written = fanflow::run_synth(cfg);
        else
            written = fanflow::run_report(cfg);

        for (const std::string& name : written)
            std::cout << (cfg.out_dir / name).string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fanflow: error: " << e.what() << "\n";
        return 1;
    }
}
