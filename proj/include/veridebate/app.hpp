#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "veridebate/config.hpp"
#include "veridebate/dataset.hpp"
#include "veridebate/encoding.hpp"
#include "veridebate/llm_gateway.hpp"
#include "veridebate/pipeline.hpp"
#include "veridebate/prompts.hpp"

namespace veridebate {

inline constexpr const char* kApiKeyEnv = "VERIDEBATE_API_KEY";

/// Directories of one run: <out>/<run_id>/{transcripts,reports,checkpoints,cache}
/// unless overridden in the config.
struct RunWorkspace {
  std::filesystem::path root;
  std::filesystem::path transcripts;
  std::filesystem::path reports;
  std::filesystem::path checkpoints;
  std::filesystem::path response_cache;
  std::filesystem::path embedding_cache;

  /// Creates every directory; throws ConfigError when one cannot be created.
  static RunWorkspace open(const PipelineConfig& config);
};

/// "<UTC yyyymmddThhmmss>-s<seed>"
std::string default_run_id(std::uint64_t seed);

std::shared_ptr<TextBackend> make_backend(const PipelineConfig& config);
std::shared_ptr<Gateway> make_gateway(const PipelineConfig& config, const RunWorkspace& ws);
std::shared_ptr<EmbeddingProvider> make_embedder(const PipelineConfig& config, const RunWorkspace& ws);

/// Wires the config into a Pipeline whose debates and reports are read from the
/// workspace stores when present and generated (then stored) otherwise.
class Application {
 public:
  explicit Application(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const RunWorkspace& workspace() const { return ws_; }
  Gateway& gateway() { return *gateway_; }
  Dataset load_dataset() const;

  DebateLog debate_for(const NewsItem& item);
  SummaryReport report_for(const NewsItem& item, const DebateLog& log);
  Pipeline make_pipeline(std::optional<std::filesystem::path> output_dir);

 private:
  PipelineConfig config_;
  RunWorkspace ws_;
  PromptLibrary prompts_;
  std::shared_ptr<Gateway> gateway_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  JsonStore transcripts_;
  JsonStore reports_;
};

struct CommandOutcome {
  int exit_code = 0;
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  GatewayStats gateway;
  std::optional<std::filesystem::path> output;
};

/// One transcript per item under the transcripts dir; existing files are skipped.
/// Items run concurrently up to the gateway's concurrency limit.
CommandOutcome cmd_debate(const PipelineConfig& config);
/// One report per item with a transcript; existing reports are skipped.
CommandOutcome cmd_synthesize(const PipelineConfig& config);
/// Trains on the train split (val split selects the checkpoint) and writes checkpoints/model.ckpt.
CommandOutcome cmd_train(const PipelineConfig& config);
/// Scores the test split (every item if there is none) with a checkpoint.
CommandOutcome cmd_predict(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                           const std::filesystem::path& predictions_out);
/// Metrics from a predictions JSONL file; writes <stem>.metrics.json and .txt beside it.
CommandOutcome cmd_evaluate(const std::filesystem::path& predictions);
/// Full run; outputs under <workspace>/full.
CommandOutcome cmd_pipeline(const PipelineConfig& config);
/// One pipeline run per variant plus ablation.json / ablation.txt in the workspace.
CommandOutcome cmd_ablate(const PipelineConfig& config, const std::vector<AblationToggle>& variants);

}  // namespace veridebate
