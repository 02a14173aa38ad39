#include "fanflow/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fanflow/format.hpp"

namespace fanflow {

namespace {

std::string month_or_empty(const std::optional<MonthKey>& m) { return m ? m->str() : ""; }

}  // namespace

void RunConfig::validate() const {
    overlap.validate();
    if (from && to && !(*from <= *to)) throw ConfigError("window: from must not exceed to");
    if (state_horizon < 1) throw ConfigError("state horizon must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    for (int k : retention_horizons)
        if (k < 1) throw ConfigError("retention horizons must be >= 1");
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["events"] = events_path.string();
    j["roster"] = roster_path.string();
    j["out"] = out_dir.string();
    j["from"] = month_or_empty(from);
    j["to"] = month_or_empty(to);
    j["theta"] = overlap.theta;
    j["n_min"] = overlap.n_min;
    j["tau_u"] = overlap.tau_u;
    j["retention_horizons"] = retention_horizons;
    j["state_horizon"] = state_horizon;
    nlohmann::ordered_json om = nlohmann::ordered_json::array();
    for (MonthKey m : origin_months) om.push_back(m.str());
    j["origin_months"] = om;
    j["seed"] = seed;
    j["threads"] = threads;
    j["format"] = format == OutputFormat::Csv ? "csv" : "json";
    j["unified_unthresholded"] = unified_unthresholded;
    return j;
}

// ---- artifacts -------------------------------------------------------------

ArtifactSet::ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ArtifactSet::path(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
}

void ArtifactSet::write_text(const std::string& name, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw IngestError("cannot write artifact: " + name);
    out << content;
}

void ArtifactSet::write_json(const std::string& name, const nlohmann::ordered_json& j) {
    write_text(name, j.dump(2) + "\n");
}

void ArtifactSet::remove_all() noexcept {
    std::error_code ec;
    for (const std::string& name : names_) std::filesystem::remove(dir_ / name, ec);
}

uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open for digest: " + path.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i)
            h = (h ^ static_cast<unsigned char>(buf[i])) * 0x100000001b3ULL;
        if (!in) break;
    }
    return h;
}

std::string fnv1a64_hex(uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

// ---- loading ----------------------------------------------------------------

PipelineData load_pipeline_data(const RunConfig& cfg) {
    cfg.validate();

    PipelineData data;
    data.roster = parse_roster_file(cfg.roster_path);

    ParseOptions opt;
    opt.roster = &data.roster;
    if (cfg.from && cfg.to) opt.window = MonthWindow{*cfg.from, *cfg.to};
    ParseResult parsed = parse_events_file(cfg.events_path, std::nullopt, opt);
    data.events = std::move(parsed.table);
    data.parse_report = parsed.report;
    data.parse_report.duplicates_removed = dedupe(data.events);

    if (cfg.from && cfg.to) {
        data.window = MonthWindow{*cfg.from, *cfg.to};
    } else {
        if (data.events.events.empty())
            throw ConfigError("no in-scope events; cannot derive an observation window");
        int64_t lo = INT64_MAX, hi = INT64_MIN;
        for (const ChatEvent& e : data.events.events) {
            int64_t ord = month_of_epoch(e.ts).ordinal();
            lo = std::min(lo, ord);
            hi = std::max(hi, ord);
        }
        MonthKey from = cfg.from ? *cfg.from : MonthKey::from_ordinal(lo);
        MonthKey to = cfg.to ? *cfg.to : MonthKey::from_ordinal(hi);
        if (!(from <= to)) throw ConfigError("derived window is empty");
        data.window = MonthWindow{from, to};
    }

    data.panel = FanMonthPanel::build(data.events, data.roster, data.window, &data.panel_report);
    return data;
}

// ---- stage emitters ----------------------------------------------------------

namespace {

nlohmann::ordered_json parse_report_json(const PipelineData& data) {
    const ParseReport& r = data.parse_report;
    nlohmann::ordered_json j;
    j["lines"] = r.lines;
    j["parsed"] = r.parsed;
    j["malformed"] = r.malformed;
    j["out_of_window"] = r.out_of_window;
    j["unknown_channel"] = r.unknown_channel;
    j["duplicates_removed"] = r.duplicates_removed;
    j["roster_entries"] = data.roster.entries.size();
    j["roster_duplicate_warnings"] = data.roster.duplicate_warnings;
    j["roster_rejected_rows"] = data.roster.rejected_rows;
    return j;
}

void emit_ingest(ArtifactSet& art, const PipelineData& data, const RunConfig& cfg) {
    const char* name = cfg.format == OutputFormat::Json ? "events.jsonl" : "events.csv";
    std::ofstream out(art.path(name), std::ios::binary);
    if (cfg.format == OutputFormat::Json)
        write_events_jsonl(out, data.events);
    else
        write_events_csv(out, data.events);
    art.write_json("parse_report.json", parse_report_json(data));
}

void emit_panel(ArtifactSet& art, const PipelineData& data, const RunConfig& cfg) {
    {
        std::ofstream out(art.path("retention_rates.csv"), std::ios::binary);
        write_retention_csv(out, data.panel, cfg.retention_horizons);
    }
    {
        std::ofstream out(art.path("creator_commitment.csv"), std::ios::binary);
        write_creator_metrics_csv(out, data.panel);
    }
    const PanelReport& r = data.panel_report;
    nlohmann::ordered_json j;
    j["window_from"] = data.window.from.str();
    j["window_to"] = data.window.to.str();
    j["events_total"] = r.events_total;
    j["events_used"] = r.events_used;
    j["out_of_window"] = r.out_of_window;
    j["unknown_channel"] = r.unknown_channel;
    j["total_messages"] = r.total_messages;
    j["cells"] = r.cells;
    j["users"] = data.panel.n_users();
    art.write_json("panel_report.json", j);
}

std::vector<MonthKey> resolve_origin_months(const PipelineData& data, const RunConfig& cfg) {
    if (!cfg.origin_months.empty()) return cfg.origin_months;
    std::vector<MonthKey> months;
    for (uint32_t m = 0; m < data.panel.n_months(); ++m) {
        MonthKey month = data.panel.month_at(m);
        if (data.window.contains(month.plus(cfg.state_horizon))) months.push_back(month);
    }
    return months;
}

void emit_states(ArtifactSet& art, const PipelineData& data, const RunConfig& cfg) {
    std::vector<MonthKey> origins = resolve_origin_months(data, cfg);
    FlowTable agency =
        flow_distribution(data.panel, Affiliation::Agency, origins, cfg.state_horizon);
    FlowTable indep =
        flow_distribution(data.panel, Affiliation::Independent, origins, cfg.state_horizon);
    art.write_json("flow_agency.json", export_sankey(agency));
    art.write_json("flow_independent.json", export_sankey(indep));

    std::ostringstream csv;
    write_flow_csv(csv, agency);
    std::ostringstream csv2;
    write_flow_csv(csv2, indep);
    std::string body = csv.str();
    std::string second = csv2.str();
    // Drop the second header line when concatenating.
    size_t nl = second.find('\n');
    art.write_text("flow_paths.csv", body + (nl == std::string::npos ? "" : second.substr(nl + 1)));
}

struct NetworkData {
    std::vector<MonthlyGraph> monthly;
    UnifiedGraph unified;
};

NetworkData build_network(const PipelineData& data, const RunConfig& cfg) {
    NetworkData net;
    net.monthly = build_monthly_graphs(data.panel, cfg.overlap, cfg.threads);
    net.unified = cfg.unified_unthresholded
                      ? unified_graph_unthresholded(data.panel, cfg.overlap, cfg.threads)
                      : unified_graph(net.monthly, data.panel);
    return net;
}

void emit_network(ArtifactSet& art, const PipelineData& data, const NetworkData& net) {
    {
        std::ofstream out(art.path("monthly_edges.csv"), std::ios::binary);
        write_monthly_edges_csv(out, net.monthly, data.panel);
    }
    {
        std::ofstream out(art.path("monthly_nodes.csv"), std::ios::binary);
        write_monthly_nodes_csv(out, net.monthly, data.panel);
    }
    {
        std::ofstream out(art.path("unified_edges.csv"), std::ios::binary);
        write_unified_edges_csv(out, net.unified, data.panel);
    }
}

void emit_metrics(ArtifactSet& art, const PipelineData& data, const NetworkData& net,
                  const RunConfig& cfg) {
    auto rows = metrics_timeseries(net.monthly, data.panel);
    {
        std::ofstream out(art.path("graph_metrics.csv"), std::ios::binary);
        write_graph_metrics_csv(out, rows);
    }
    auto node_rows = unified_node_metrics(net.unified, data.panel, cfg.threads);
    {
        std::ofstream out(art.path("node_metrics.csv"), std::ios::binary);
        write_node_metrics_csv(out, node_rows, data.panel);
    }
}

void append_test_result(nlohmann::ordered_json& row, const TestResult& r) {
    row["test"] = to_string(r.test);
    row["statistic"] = r.statistic;
    row["p"] = r.p_value;
    row["effect_size_kind"] = to_string(r.effect_kind);
    if (r.effect_kind == EffectKind::None)
        row["effect_size"] = nullptr;
    else
        row["effect_size"] = r.effect_size;
    row["exact"] = r.exact;
}

double mean_vec(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

nlohmann::ordered_json stats_report_with_net(const PipelineData& data, const NetworkData& net) {
    nlohmann::ordered_json report;
    report["window"] = {{"from", data.window.from.str()}, {"to", data.window.to.str()}};

    // Commitment metrics: creator-level distributions, Agency vs Independent.
    auto table = creator_commitment_table(data.panel);
    struct MetricDef {
        const char* name;
        std::optional<double> CreatorMetricsRow::* field;
    };
    const MetricDef defs[] = {
        {"two_month_retention", &CreatorMetricsRow::retention2},
        {"three_month_retention", &CreatorMetricsRow::retention3},
        {"longest_active_run", &CreatorMetricsRow::longest_run},
        {"oshi_switch_probability", &CreatorMetricsRow::switch_prob},
    };

    nlohmann::ordered_json commitment = nlohmann::ordered_json::array();
    for (const MetricDef& def : defs) {
        std::vector<double> a, i;
        for (const CreatorMetricsRow& row : table) {
            const auto& v = row.*(def.field);
            if (!v) continue;
            (row.affiliation == Affiliation::Agency ? a : i).push_back(*v);
        }
        nlohmann::ordered_json row;
        row["metric"] = def.name;
        row["n_agency"] = a.size();
        row["n_independent"] = i.size();
        row["mean_agency"] = mean_vec(a);
        row["mean_independent"] = mean_vec(i);
        row["delta"] = mean_vec(a) - mean_vec(i);
        if (a.empty() || i.empty()) {
            row["test"] = nullptr;
        } else {
            TestResult r = compare_unpaired(a, i);
            row["sw_p_agency"] = r.sw_p_a ? nlohmann::ordered_json(*r.sw_p_a) : nullptr;
            row["sw_p_independent"] = r.sw_p_b ? nlohmann::ordered_json(*r.sw_p_b) : nullptr;
            append_test_result(row, r);
        }
        commitment.push_back(row);
    }
    report["commitment"] = commitment;

    // Paired monthly network metrics.
    auto rows = metrics_timeseries(net.monthly, data.panel);

    struct SeriesDef {
        const char* name;
        double (*get)(const GraphMetricsRow&);
    };
    const SeriesDef series[] = {
        {"nodes", [](const GraphMetricsRow& m) { return static_cast<double>(m.nodes); }},
        {"edges", [](const GraphMetricsRow& m) { return static_cast<double>(m.edges); }},
        {"density", [](const GraphMetricsRow& m) { return m.density; }},
        {"avg_degree", [](const GraphMetricsRow& m) { return m.avg_degree; }},
        {"clustering", [](const GraphMetricsRow& m) { return m.mean_clustering; }},
        {"largest_component",
         [](const GraphMetricsRow& m) { return static_cast<double>(m.largest_component); }},
    };

    nlohmann::ordered_json network = nlohmann::ordered_json::array();
    for (const SeriesDef& def : series) {
        std::vector<double> a, i;
        for (size_t r = 0; r + 1 < rows.size(); r += 2) {
            const SegmentMetricsRow& ra = rows[r];      // agency row
            const SegmentMetricsRow& ri = rows[r + 1];  // independent row
            if (ra.empty_segment || ri.empty_segment) continue;
            a.push_back(def.get(ra.metrics));
            i.push_back(def.get(ri.metrics));
        }
        nlohmann::ordered_json row;
        row["metric"] = def.name;
        row["n_months"] = a.size();
        row["mean_agency"] = mean_vec(a);
        row["mean_independent"] = mean_vec(i);
        row["delta"] = mean_vec(a) - mean_vec(i);
        if (a.size() < 2) {
            row["test"] = nullptr;
        } else {
            try {
                TestResult r = compare_paired(a, i);
                row["p_sw"] = r.sw_p_diff ? nlohmann::ordered_json(*r.sw_p_diff) : nullptr;
                append_test_result(row, r);
            } catch (const StatsError&) {
                row["test"] = nullptr;
                row["degenerate"] = true;
            }
        }
        network.push_back(row);
    }
    report["network"] = network;
    return report;
}

}  // namespace

nlohmann::ordered_json build_stats_report(const PipelineData& data, const RunConfig& cfg) {
    return stats_report_with_net(data, build_network(data, cfg));
}

// ---- subcommands ---------------------------------------------------------

namespace {

nlohmann::ordered_json manifest_json(const RunConfig& cfg, const std::string& subcommand,
                                     const PipelineData* data, ArtifactSet& art) {
    nlohmann::ordered_json j;
    j["tool"] = "fanflow";
    j["version"] = FANFLOW_VERSION;
    j["subcommand"] = subcommand;
    nlohmann::ordered_json params = cfg.to_json();
    if (data) {
        params["resolved_from"] = data->window.from.str();
        params["resolved_to"] = data->window.to.str();
    }
    j["parameters"] = params;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    if (subcommand != "synth") {
        for (const auto& p : {cfg.events_path, cfg.roster_path})
            inputs.push_back({{"path", p.string()}, {"fnv1a64", fnv1a64_hex(fnv1a64_file(p))}});
    }
    j["inputs"] = inputs;
    std::vector<std::string> outputs = art.names();
    outputs.push_back("manifest.json");
    std::sort(outputs.begin(), outputs.end());
    j["outputs"] = outputs;
    return j;
}

template <typename Fn>
std::vector<std::string> run_stage(const RunConfig& cfg, const std::string& name, bool needs_data,
                                   Fn&& body) {
    ArtifactSet art(cfg.out_dir);
    try {
        std::optional<PipelineData> data;
        if (needs_data) data = load_pipeline_data(cfg);
        body(art, data ? &*data : nullptr);
        art.write_json("manifest.json", manifest_json(cfg, name, data ? &*data : nullptr, art));
        return art.names();
    } catch (...) {
        art.remove_all();
        throw;
    }
}

}  // namespace

std::vector<std::string> run_ingest(const RunConfig& cfg) {
    return run_stage(cfg, "ingest", true, [&](ArtifactSet& art, const PipelineData* data) {
        emit_ingest(art, *data, cfg);
    });
}

std::vector<std::string> run_panel(const RunConfig& cfg) {
    return run_stage(cfg, "panel", true, [&](ArtifactSet& art, const PipelineData* data) {
        emit_panel(art, *data, cfg);
    });
}

std::vector<std::string> run_states(const RunConfig& cfg) {
    return run_stage(cfg, "states", true, [&](ArtifactSet& art, const PipelineData* data) {
        emit_states(art, *data, cfg);
    });
}

std::vector<std::string> run_network(const RunConfig& cfg) {
    return run_stage(cfg, "network", true, [&](ArtifactSet& art, const PipelineData* data) {
        emit_network(art, *data, build_network(*data, cfg));
    });
}

std::vector<std::string> run_metrics(const RunConfig& cfg) {
    return run_stage(cfg, "metrics", true, [&](ArtifactSet& art, const PipelineData* data) {
        emit_metrics(art, *data, build_network(*data, cfg), cfg);
    });
}

std::vector<std::string> run_stats(const RunConfig& cfg) {
    return run_stage(cfg, "stats", true, [&](ArtifactSet& art, const PipelineData* data) {
        art.write_json("stats_report.json", build_stats_report(*data, cfg));
    });
}

std::vector<std::string> run_synth(const RunConfig& cfg) {
    return run_stage(cfg, "synth", false, [&](ArtifactSet& art, const PipelineData*) {
        SynthConfig synth = cfg.synth;
        synth.seed = cfg.seed;
        if (cfg.from) synth.start = *cfg.from;
        SynthOutput out = generate(synth);
        if (cfg.format == OutputFormat::Json) {
            std::ofstream f(art.path("synth_events.jsonl"), std::ios::binary);
            write_events_jsonl(f, out.events);
        } else {
            std::ofstream f(art.path("synth_events.csv"), std::ios::binary);
            write_events_csv(f, out.events);
        }
        std::ofstream f(art.path("synth_roster.csv"), std::ios::binary);
        write_roster_csv(f, out.roster);
    });
}

std::vector<std::string> run_report(const RunConfig& cfg) {
    return run_stage(cfg, "report", true, [&](ArtifactSet& art, const PipelineData* data) {
        emit_ingest(art, *data, cfg);
        emit_panel(art, *data, cfg);
        emit_states(art, *data, cfg);
        NetworkData net = build_network(*data, cfg);
        emit_network(art, *data, net);
        emit_metrics(art, *data, net, cfg);
        nlohmann::ordered_json stats = stats_report_with_net(*data, net);
        art.write_json("stats_report.json", stats);

        nlohmann::ordered_json report;
        report["tool"] = "fanflow";
        report["version"] = FANFLOW_VERSION;
        report["parameters"] = cfg.to_json();
        report["window"] = stats["window"];
        report["commitment"] = stats["commitment"];
        report["network"] = stats["network"];
        art.write_json("report.json", report);
    });
}

}  // namespace fanflow
