#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "veridebate/app.hpp"
#include "veridebate/errors.hpp"

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> interaction_mode;
  std::optional<bool> strict;
  std::optional<std::string> run_id;
  std::optional<std::string> transcripts;
  std::optional<int> epochs;
  std::string checkpoint;
  std::string predictions;
  std::vector<std::string> variants{"full", "no_debate", "no_synthesis", "no_analysis"};
  bool quiet = false;
};

// Config file first, then flags on top.
veridebate::PipelineConfig resolve(const Flags& f) {
  using namespace veridebate;
  PipelineConfig c = f.config ? load_config(*f.config) : PipelineConfig{};
  if (f.dataset) c.paths.dataset = *f.dataset;
  if (f.out) c.paths.out = *f.out;
  if (f.seed) c.set_seed(*f.seed);
  if (f.backend) c.gateway.backend = *f.backend;
  if (f.interaction_mode) c.model.mode = parse_interaction_mode(*f.interaction_mode);
  if (f.strict) c.dataset.strict = *f.strict;
  if (f.transcripts) c.paths.transcripts = *f.transcripts;
  if (f.epochs) c.training.epochs = *f.epochs;
  c.run_id = f.run_id ? *f.run_id : (c.run_id.empty() ? default_run_id(c.seed) : c.run_id);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent debate pipeline for fake-news detection"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--dataset", f.dataset, "JSONL dataset {id, content, label, split}");
  app.add_option("--out", f.out, "Root directory for run workspaces");
  app.add_option("--seed", f.seed, "Seed for debate generation, model init and shuffling");
  app.add_option("--backend", f.backend, "Text backend")->check(CLI::IsMember({"mock", "remote"}));
  app.add_option("--interaction-mode", f.interaction_mode, "News/graph interaction sources")
      ->check(CLI::IsMember({"nodes", "pooled"}));
  app.add_flag("--strict,!--lenient", f.strict, "Fail on malformed dataset lines and on any failed item");
  app.add_option("--run-id", f.run_id, "Workspace name under --out (default: timestamp and seed)");
  app.add_option("--transcripts", f.transcripts, "Transcript directory (default: <workspace>/transcripts)");
  app.add_option("--epochs", f.epochs, "Training epochs");
  app.add_flag("--quiet,-q", f.quiet, "Only log warnings and errors");

  auto* debate = app.add_subcommand("debate", "Run the four-stage debate for every item");
  auto* synth = app.add_subcommand("synthesize", "Write a synthesis report for every debated item");
  auto* train = app.add_subcommand("train", "Train the analysis model and write checkpoints/model.ckpt");
  auto* predict = app.add_subcommand("predict", "Score the test split with a checkpoint");
  predict->add_option("--checkpoint", f.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--predictions", f.predictions, "Output JSONL (default: <workspace>/predictions.jsonl)");
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics from a predictions file");
  evaluate->add_option("--predictions", f.predictions, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  auto* pipeline = app.add_subcommand("pipeline", "debate, synthesize, train, predict and evaluate in one run");
  auto* ablate = app.add_subcommand("ablate", "Run the pipeline once per ablation variant");
  ablate->add_option("--variants", f.variants, "full, no_debate, no_synthesis, no_analysis")->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(f.quiet ? spdlog::level::warn : spdlog::level::info);

  using namespace veridebate;
  try {
    if (evaluate->parsed()) return cmd_evaluate(f.predictions).exit_code;

    const PipelineConfig config = resolve(f);
    spdlog::info("run id {}", config.run_id);
    CommandOutcome outcome;
    if (debate->parsed()) {
      outcome = cmd_debate(config);
    } else if (synth->parsed()) {
      outcome = cmd_synthesize(config);
    } else if (train->parsed()) {
      outcome = cmd_train(config);
    } else if (predict->parsed()) {
      const auto out = f.predictions.empty() ? config.paths.out / config.run_id / "predictions.jsonl"
                                             : std::filesystem::path(f.predictions);
      outcome = cmd_predict(config, f.checkpoint, out);
    } else if (pipeline->parsed()) {
      outcome = cmd_pipeline(config);
    } else if (ablate->parsed()) {
      std::vector<AblationToggle> toggles;
      for (const auto& v : f.variants) toggles.push_back(parse_toggle(v));
      outcome = cmd_ablate(config, toggles);
    }
    if (outcome.output) std::cout << outcome.output->string() << "\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
