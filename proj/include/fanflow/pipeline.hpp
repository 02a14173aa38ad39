#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fanflow/graph_metrics.hpp"
#include "fanflow/overlap.hpp"
#include "fanflow/panel.hpp"
#include "fanflow/states.hpp"
#include "fanflow/stats.hpp"
#include "fanflow/synth.hpp"

namespace fanflow {

enum class OutputFormat { Csv, Json };

struct RunConfig {
    std::filesystem::path events_path;
    std::filesystem::path roster_path;
    std::filesystem::path out_dir = "out";

    std::optional<MonthKey> from;  // derived from the data when unset
    std::optional<MonthKey> to;

    OverlapConfig overlap;                    // theta=0.05, n_min=10, tau_u=25
    std::vector<int> retention_horizons{2, 3};
    int state_horizon = 3;
    std::vector<MonthKey> origin_months;      // empty: all evaluable months
    uint64_t seed = 1;
    int threads = 1;
    OutputFormat format = OutputFormat::Csv;
    bool unified_unthresholded = false;

    SynthConfig synth;  // consumed by the synth subcommand

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

// Everything the analysis stages need, built once.
struct PipelineData {
    Roster roster;
    EventTable events;
    ParseReport parse_report;
    MonthWindow window;
    FanMonthPanel panel;
    PanelReport panel_report;
};

PipelineData load_pipeline_data(const RunConfig& cfg);

// Files created under cfg.out_dir are recorded so a failed run can remove
// its partial outputs.
class ArtifactSet {
public:
    explicit ArtifactSet(std::filesystem::path dir);
    std::filesystem::path path(const std::string& name);
    void write_text(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::ordered_json& j);
    const std::vector<std::string>& names() const { return names_; }
    const std::filesystem::path& dir() const { return dir_; }
    void remove_all() noexcept;

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string fnv1a64_hex(uint64_t digest);

// Subcommands. Each writes its documented artifacts plus manifest.json and
// returns the list of files written (manifest included).
std::vector<std::string> run_ingest(const RunConfig& cfg);
std::vector<std::string> run_panel(const RunConfig& cfg);
std::vector<std::string> run_states(const RunConfig& cfg);
std::vector<std::string> run_network(const RunConfig& cfg);
std::vector<std::string> run_metrics(const RunConfig& cfg);
std::vector<std::string> run_stats(const RunConfig& cfg);
std::vector<std::string> run_synth(const RunConfig& cfg);
std::vector<std::string> run_report(const RunConfig& cfg);

// Stats report content (the Tables II/III-shaped JSON) for library callers.
nlohmann::ordered_json build_stats_report(const PipelineData& data, const RunConfig& cfg);

}  // namespace fanflow
