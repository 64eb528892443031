#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiepar/common.hpp"

namespace hiepar::app {

// Settings for one pipeline run. Relative paths are resolved against
// base_dir (the directory holding the config file).
struct PipelineConfig {
  std::filesystem::path base_dir = ".";
  std::string records;
  std::string taxonomy;
  std::string output_dir = "run";
  std::string external_scores;  // optional scores file from an external classifier

  std::uint64_t seed = 1;
  int test_year = 2017;
  std::size_t min_papers = 15;
  std::size_t min_count = 5;
  std::size_t max_sentences = 100;
  std::size_t max_tokens = 50;

  std::size_t embed_dim = 100;
  std::size_t hidden_dim = 50;
  std::size_t attention_dim = 100;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double init_scale = 0.05;

  std::string mlc = "network_head";
  std::size_t knn_k = 10;
  std::size_t mlbra_k = 5;
  std::vector<std::size_t> k_grid = {1, 3, 5, 7, 10, 13, 25, 50};
  std::size_t report_candidates = 10;
  bool exclude_authors = true;
  double highlight_threshold = 0.1;

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path output_path(std::string_view file) const;
};

// Parses a JSON config. Unknown keys are rejected.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
// Reads a config file and applies "key=value" overrides (values are read
// as JSON when possible, otherwise as strings). Overrides win.
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
// Throws on non-positive numeric fields, an empty k-grid or an unknown
// classifier kind.
void validate_config(const PipelineConfig& config);
// JSON object of every setting except base_dir and output_dir.
std::string config_snapshot(const PipelineConfig& config);

enum class Stage { kIngest, kTrain, kPredict, kExport, kAssign, kEval, kCoarsen, kBaseline, kHighlight };

std::string_view stage_name(Stage stage);
Stage stage_from_string(std::string_view name);

// Artifact file names inside output_dir.
namespace files {
inline constexpr std::string_view kVocab = "vocab.tsv";
inline constexpr std::string_view kLabels = "labels.tsv";
inline constexpr std::string_view kReviewers = "reviewers.jsonl";
inline constexpr std::string_view kPapers = "papers.jsonl";
inline constexpr std::string_view kStats = "stats.json";
inline constexpr std::string_view kModel = "model.bin";
inline constexpr std::string_view kLossHistory = "loss_history.tsv";
inline constexpr std::string_view kScores = "scores.txt";
inline constexpr std::string_view kMlcTrain = "mlc_train.txt";
inline constexpr std::string_view kMlcTest = "mlc_test.txt";
inline constexpr std::string_view kAssignments = "assignments.tsv";
inline constexpr std::string_view kMetricsTable = "metrics.txt";
inline constexpr std::string_view kMetrics = "metrics.kv";
inline constexpr std::string_view kBaseline = "baseline.kv";
inline constexpr std::string_view kAttention = "attention.tsv";
inline constexpr std::string_view kHighlights = "highlights.tsv";
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kTimings = "timings.json";
std::string coarse(int strategy);  // "coarse_s1.kv" / "coarse_s2.kv"
}  // namespace files

// Progress messages go to `log` when it is non-null.
void run_ingest(const PipelineConfig& config, std::ostream* log = nullptr);
void run_train(const PipelineConfig& config, std::ostream* log = nullptr);
void run_predict(const PipelineConfig& config, std::ostream* log = nullptr);
void run_export(const PipelineConfig& config, std::ostream* log = nullptr);
void run_assign(const PipelineConfig& config, std::ostream* log = nullptr);
void run_eval(const PipelineConfig& config, std::ostream* log = nullptr);
void run_coarsen(const PipelineConfig& config, int strategy, std::ostream* log = nullptr);
void run_baseline(const PipelineConfig& config, std::ostream* log = nullptr);
void run_highlight(const PipelineConfig& config, std::ostream* log = nullptr);

// Runs one stage, rethrowing failures as "<stage>: <cause>".
void run_stage(Stage stage, const PipelineConfig& config, std::ostream* log = nullptr, int coarsen_strategy = 1);

// Config snapshot, input digests, corpus statistics and artifact digests.
// Written to manifest.json; timings go to timings.json so the manifest
// stays byte-identical across reruns.
void write_manifest(const PipelineConfig& config);

// ingest -> train -> predict -> export -> assign -> eval -> coarsen (both
// strategies) -> baseline -> highlight, optionally resuming at `from`.
// Validates inputs before any stage runs.
void run_pipeline(const PipelineConfig& config, std::optional<Stage> from = std::nullopt,
                  std::ostream* log = nullptr);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace hiepar::app
