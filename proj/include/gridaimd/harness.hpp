#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridaimd/engine.hpp"
#include "gridaimd/metrics.hpp"

namespace gridaimd {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct ProfilesSpec {
  enum class Source { Synth, Csv } source = Source::Synth;
  std::uint64_t seed = 0;
  bool seed_given = false;  // when false, derived from the run seed
  int households = 416;
  int days = 31;
  SynthParams params;
  std::string csv_path;
};

struct ScenarioFile {
  ScenarioConfig engine;
  std::string topology_path;
  ProfilesSpec profiles;
  std::string models_dir;  // ProposedAimd
};

struct CampaignFile {
  CampaignPlan plan;
  std::string topology_path;
  ProfilesSpec profiles;
};

struct TrainInvocation {
  std::string history_dir;
  std::vector<BusId> buses;  // empty = every features file in the directory
  bool shared_model = false; // one pooled model reused for every node
  std::string out_dir;
  EstimatorConfig config;
  int jobs = 0;  // 0 = hardware concurrency
};

// JSON loaders with path-aware diagnostics.
GridConfig load_grid_config(const std::string& path);
ScenarioFile load_scenario_file(const std::string& path);
CampaignFile load_campaign_file(const std::string& path);

std::string scenario_to_json(const ScenarioFile& sf);
std::string campaign_to_json(const CampaignFile& cf);
std::string grid_config_to_json(const GridConfig& gc);
std::string train_to_json(const TrainInvocation& ti);

ScenarioFile scenario_from_json(const std::string& text, const std::string& origin);
CampaignFile campaign_from_json(const std::string& text, const std::string& origin);
GridConfig grid_config_from_json(const std::string& text, const std::string& origin);
TrainInvocation train_from_json(const std::string& text, const std::string& origin);

ProfileLibrary open_profiles(const ProfilesSpec& spec, std::uint64_t run_seed);

// Run manifest: enough to re-execute the pipeline step and verify inputs.
struct ManifestInput {
  std::string name;
  std::string path;
  std::string fnv64_hex;
};

struct RunManifest {
  std::string command;
  std::string artifact_version;
  std::uint64_t seed = 0;
  std::string config_hash_hex;
  std::string config_text;  // verbatim resolved invocation JSON
  std::vector<ManifestInput> inputs;
  std::vector<std::string> outputs;
  double wall_clock_s = 0.0;
  std::string trace_hash_hex;  // simulate only
};

void write_manifest(const RunManifest& manifest, const std::string& dir);
RunManifest read_manifest(const std::string& path);
std::string file_digest_hex(const std::string& path);

// Trace persistence (plain CSV, %.17g so report recomputation is exact).
void write_trace_csvs(const SimulationTrace& trace, const std::string& dir,
                      std::vector<std::string>& written);
std::vector<double> read_feeder_csv(const std::string& path);
std::vector<EvSummary> read_ev_summary_csv(const std::string& path);

Scorecard scorecard_from_files(const std::string& dir, const std::string& scenario_label);

// Pipeline steps used by both the CLI and the acceptance suite.
void pipeline_build_grid(const GridConfig& config, const std::string& out_path);
void pipeline_synth_profiles(const ProfilesSpec& spec, const std::string& out_dir);
SimulationTrace pipeline_simulate(const ScenarioFile& sf, const std::string& out_dir);
void pipeline_campaign(const CampaignFile& cf, const std::string& out_dir);
void pipeline_train(const TrainInvocation& ti);
Scorecard pipeline_report(const std::string& run_dir);

// Runs NoEv, NoControl, IdealAimd and ProposedAimd on identical seeds and
// profiles; returns the scorecards in that order.
std::vector<Scorecard> reproduce_table1(const ScenarioFile& base, const std::string& models_dir,
                                        const std::string& out_dir);

int pipeline_rerun(const std::string& manifest_path, const std::string& out_dir);

// Reads features_bus_<id>.csv rows written by the campaign.
void read_feature_rows(const std::string& path, std::vector<FeatureVector>& features,
                       std::vector<double>& labels);
std::vector<BusId> list_feature_buses(const std::string& history_dir);
ModelStore load_models(const std::string& dir);

int cli_dispatch(int argc, const char* const* argv);

}  // namespace gridaimd
