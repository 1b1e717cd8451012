#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "veridebate/domain.hpp"

namespace veridebate {

/// Confusion counts for one class treated as the positive class.
struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  double precision() const;
  double recall() const;
  /// 2PR/(P+R), 0 when P+R = 0.
  double f1() const;
  bool operator==(const ClassCounts&) const = default;
};

struct MetricsReport {
  std::array<ClassCounts, 2> per_class;  // indexed by label_index
  std::size_t total = 0;
  double accuracy = 0.0;
  double f1_real = 0.0;
  double f1_fake = 0.0;
  double macro_f1 = 0.0;
  bool in_sample = false;
};

/// Throws PreconditionError on a length mismatch or empty input.
MetricsReport compute_metrics(std::span<const Label> predictions, std::span<const Label> labels);

nlohmann::json metrics_to_json(const MetricsReport& report);

/// Aligned plain-text table, one row per named report.
std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

/// Fake iff p_fake > p_real; ties go to real.
Label decide(const std::array<double, 2>& probs);

struct PredictionRecord {
  std::string id;
  std::optional<Label> label;
  Label prediction = Label::Real;
  double p_fake = 0.0;
  bool operator==(const PredictionRecord&) const = default;
};

nlohmann::json prediction_to_json(const PredictionRecord& record);
void write_predictions_jsonl(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path);

}  // namespace veridebate
