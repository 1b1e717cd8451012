#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "veridebate/domain.hpp"
#include "veridebate/model.hpp"
#include "veridebate/trainer.hpp"

namespace veridebate {

struct GatewaySettings {
  std::string backend = "mock";  // mock | remote
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  int max_concurrent = 4;
  int requests_per_minute = 0;
  int max_attempts = 4;
  int initial_backoff_ms = 500;
  int max_backoff_ms = 20000;
  int timeout_seconds = 120;
  bool cache = true;
  std::optional<std::filesystem::path> cache_dir;  // default: <workspace>/cache/responses
};

struct EmbeddingSettings {
  std::string provider = "hash";  // hash | remote
  std::size_t dim = 384;
  std::uint64_t seed = 0;
  std::string endpoint = "https://api.openai.com/v1/embeddings";
  std::string model = "text-embedding-3-small";
  bool cache = true;
  std::optional<std::filesystem::path> cache_dir;  // default: <workspace>/cache/embeddings
};

struct PathSettings {
  std::optional<std::filesystem::path> dataset;
  std::filesystem::path out = "runs";
  std::optional<std::filesystem::path> transcripts;  // default: <workspace>/transcripts
  std::optional<std::filesystem::path> reports;      // default: <workspace>/reports
  std::optional<std::filesystem::path> checkpoints;  // default: <workspace>/checkpoints
  std::optional<std::filesystem::path> prompts;      // template overrides
};

struct DatasetSettings {
  bool strict = true;
  Language language = Language::En;
  std::optional<Split> default_split;
};

struct PipelineConfig {
  GatewaySettings gateway;
  DebateConfig debate;
  EmbeddingSettings embedding;
  ModelConfig model;
  TrainConfig training;
  std::uint64_t seed = 0;
  PathSettings paths;
  DatasetSettings dataset;
  std::string run_id;  // empty: derived from the clock and the seed

  /// Sets every seed (debate generation, model init, shuffling).
  void set_seed(std::uint64_t s);
  void validate() const;
};

/// INI text with sections [gateway] [debate] [embedding] [model] [paths] [dataset].
/// Unknown sections or keys and unparseable values raise ConfigError.
PipelineConfig parse_config(const std::string& ini_text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace veridebate
