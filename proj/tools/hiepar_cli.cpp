// Command-line entry point: corpus generation, individual pipeline stages
// and full runs.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "hiepar/app.hpp"
#include "hiepar/synthetic.hpp"

namespace {

using hiepar::app::Stage;

struct StageOptions {
  std::string config;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_config_options(CLI::App* cmd, StageOptions& options) {
  cmd->add_option("-c,--config", options.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", options.overrides, "override a config key, e.g. --set epochs=5");
  cmd->add_flag("-q,--quiet", options.quiet, "suppress progress output");
}

hiepar::app::PipelineConfig load(const StageOptions& options) {
  auto config = hiepar::app::load_config(options.config, options.overrides);
  hiepar::app::validate_config(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Hierarchical attention reviewer recommendation"};
  cli.require_subcommand(1);

  hiepar::synthetic::SyntheticConfig synth;
  std::string synth_out = "synthetic";
  auto* synth_cmd = cli.add_subcommand("synth", "write the planted-topic synthetic corpus and a config for it");
  synth_cmd->add_option("-o,--out", synth_out, "output directory");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--reviewers", synth.reviewers, "number of reviewers");
  synth_cmd->add_option("--papers", synth.test_papers, "number of test papers");

  StageOptions options;
  std::map<CLI::App*, Stage> stage_commands;
  const std::pair<Stage, const char*> stages[] = {
      {Stage::kIngest, "tokenize records, build vocabulary, reviewer profiles and test papers"},
      {Stage::kTrain, "train the encoder on reviewer profiles"},
      {Stage::kPredict, "score research labels for the test papers"},
      {Stage::kExport, "write sparse datasets for external multi-label classifiers"},
      {Stage::kAssign, "recommend reviewers by label overlap"},
      {Stage::kEval, "label ranking metrics and assignment accuracy"},
      {Stage::kCoarsen, "assignment accuracy under a coarsened taxonomy"},
      {Stage::kBaseline, "TF-IDF retrieval baseline accuracy"},
      {Stage::kHighlight, "dump attention weights and highlighted words"},
  };
  int strategy = 1;
  for (const auto& [stage, help] : stages) {
    auto* cmd = cli.add_subcommand(std::string(hiepar::app::stage_name(stage)), help);
    add_config_options(cmd, options);
    if (stage == Stage::kCoarsen) {
      cmd->add_option("--strategy", strategy, "1 = first three levels, 2 = drop the last level")
          ->check(CLI::IsMember({1, 2}));
    }
    stage_commands[cmd] = stage;
  }

  std::string from;
  auto* run_cmd = cli.add_subcommand("run", "run every stage and write the manifest");
  add_config_options(run_cmd, options);
  run_cmd->add_option("--from", from, "resume at this stage");

  CLI11_PARSE(cli, argc, argv);

  try {
    std::ostream* log = options.quiet ? nullptr : &std::cerr;
    if (synth_cmd->parsed()) {
      const auto corpus = hiepar::synthetic::generate(synth);
      hiepar::synthetic::write_corpus(corpus, synth_out);
      std::ofstream(std::filesystem::path(synth_out) / "config.json") << hiepar::synthetic::pipeline_config_json();
      std::cerr << "wrote " << corpus.records.size() << " records to " << synth_out << '\n';
      return 0;
    }
    const auto config = load(options);
    if (run_cmd->parsed()) {
      std::optional<Stage> start;
      if (!from.empty()) start = hiepar::app::stage_from_string(from);
      hiepar::app::run_pipeline(config, start, log);
    } else {
      for (const auto& [cmd, stage] : stage_commands) {
        if (cmd->parsed()) hiepar::app::run_stage(stage, config, log, strategy);
      }
      hiepar::app::write_manifest(config);
    }
    if (std::ifstream table{config.output_path(hiepar::app::files::kMetricsTable)}; table && run_cmd->parsed()) {
      std::cout << table.rdbuf();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
