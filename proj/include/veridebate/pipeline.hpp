#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "veridebate/dataset.hpp"
#include "veridebate/domain.hpp"
#include "veridebate/encoding.hpp"
#include "veridebate/metrics.hpp"
#include "veridebate/model.hpp"
#include "veridebate/trainer.hpp"

namespace veridebate {

enum class AblationToggle { Full, NoDebate, NoSynthesis, NoAnalysis };

std::string_view to_string(AblationToggle t);
/// "full", "no_debate", "no_synthesis", "no_analysis"; anything else is a ConfigError.
AblationToggle parse_toggle(std::string_view name);

/// A pipeline stage failed; what() is "<stage> stage failed: <cause>".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// File name for an item id: safe characters kept, anything else replaced and
/// disambiguated with a short hash.
std::string safe_file_stem(std::string_view id);

/// <dir>/<id>.json documents (debate logs or reports), written atomically.
class JsonStore {
 public:
  explicit JsonStore(std::filesystem::path dir);
  std::filesystem::path path_for(std::string_view id) const;
  bool contains(std::string_view id) const;
  const std::filesystem::path& dir() const { return dir_; }

  std::optional<DebateLog> load_log(std::string_view id) const;
  void save(const DebateLog& log) const;
  std::optional<SummaryReport> load_report(std::string_view id) const;
  void save(const SummaryReport& report) const;

 private:
  std::filesystem::path dir_;
};

using DebateSource = std::function<DebateLog(const NewsItem&)>;
using ReportSource = std::function<SummaryReport(const NewsItem&, const DebateLog&)>;

struct PipelineOptions {
  ModelConfig model;
  TrainConfig training;
  std::uint64_t model_seed = 0;
  /// Zero the role table and keep it frozen (the "no role embeddings" ablation).
  bool zero_role_table = false;
  /// When set, predictions.jsonl, explanations.jsonl, metrics.json and
  /// metrics.txt go under <output_dir>/<variant>/, the checkpoint to model.ckpt.
  std::optional<std::filesystem::path> output_dir;
  /// Where explanation references point; optional.
  std::optional<std::filesystem::path> transcripts_dir;
  std::optional<std::filesystem::path> reports_dir;
};

struct PipelineResult {
  std::string variant;
  MetricsReport metrics;
  std::vector<PredictionRecord> predictions;
  std::optional<TrainResult> training;
  std::size_t debates_requested = 0;
  std::size_t reports_requested = 0;
};

/// debate -> synthesize -> encode/graph -> train (train split, val split for
/// checkpoint selection) -> predict (test split) -> metrics. Without test items
/// the training items are scored and the report is flagged in_sample.
class Pipeline {
 public:
  Pipeline(PipelineOptions options, DebateSource debates, ReportSource reports,
           std::shared_ptr<EmbeddingProvider> embedder);

  PipelineResult run(const Dataset& data, AblationToggle toggle = AblationToggle::Full) const;
  /// Same, with `name` as the variant label in outputs.
  PipelineResult run(const Dataset& data, AblationToggle toggle, std::string_view name) const;

  /// Encodes one item; a news-only graph when debate is null.
  GraphSample encode(const NewsItem& item, const DebateLog* debate) const;

  const PipelineOptions& options() const { return options_; }

 private:
  PipelineOptions options_;
  DebateSource debates_;
  ReportSource reports_;
  std::shared_ptr<EmbeddingProvider> embedder_;
};

/// Runs each toggle and returns (name, metrics) rows in the given order.
std::vector<std::pair<std::string, MetricsReport>> run_ablation(std::span<const AblationToggle> toggles,
                                                                const Pipeline& pipeline, const Dataset& data);

/// Prediction from the synthesis verdict hint: leans_fake -> fake, otherwise real.
Label label_from_hint(std::optional<VerdictHint> hint);

}  // namespace veridebate
