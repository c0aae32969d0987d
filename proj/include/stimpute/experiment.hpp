#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "stimpute/config.hpp"
#include "stimpute/synth.hpp"
#include "stimpute/training.hpp"

namespace stimpute {

struct PreparedData {
    SplitResult splits;
    int step_minutes = 0;
    std::string dataset_name;
};

PreparedData prepare_data(const Config& cfg);
ModelConfig model_config_from(const Config& cfg, int window_len);
TrainSettings train_settings_from(const Config& cfg);

/// Pipeline steps shared by the CLI subcommands and run_experiment. Every step
/// regenerates its inputs deterministically from the run's config.
void step_train(const Config& cfg, const std::string& run_dir);
void step_impute(const Config& cfg, const std::string& run_dir,
                 const std::string& pattern);
nlohmann::json step_eval(const Config& cfg, const std::string& run_dir,
                         const std::string& pattern);
nlohmann::json step_report(const Config& cfg, const std::string& run_dir);

/// split -> mask -> train -> impute -> evaluate -> report. Partial outputs are
/// flushed with a FAILED.json marker when a stage throws.
nlohmann::json run_experiment(const Config& cfg, const std::string& out_dir);

/// Checks the required metrics-report fields and types.
bool validate_metrics_json(const nlohmann::json& j, std::string* why = nullptr);

/// The three ablation variants: contrastive loss off, trend branch off,
/// seasonal branch off.
std::vector<std::pair<std::string, Config>> ablation_variants(const Config& base);

/// Writes a synthetic dataset (values/adjacency CSVs plus the ground-truth
/// component decomposition) to a directory.
void write_synth_files(const SynthOutput& out, const std::string& dir);

}  // namespace stimpute
