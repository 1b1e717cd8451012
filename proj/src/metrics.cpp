#include "veridebate/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "veridebate/errors.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double ClassCounts::precision() const { return ratio(tp, tp + fp); }
double ClassCounts::recall() const { return ratio(tp, tp + fn); }

double ClassCounts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

MetricsReport compute_metrics(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) {
    throw PreconditionError(fmt::format("{} predictions for {} labels", predictions.size(), labels.size()));
  }
  if (labels.empty()) throw PreconditionError("cannot compute metrics on an empty set");
  MetricsReport r;
  r.total = labels.size();
  std::size_t correct = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto truth = label_index(labels[k]);
    const auto pred = label_index(predictions[k]);
    if (truth == pred) ++correct;
    for (int c = 0; c < 2; ++c) {
      ClassCounts& cc = r.per_class[static_cast<std::size_t>(c)];
      if (pred == c && truth == c) ++cc.tp;
      else if (pred == c) ++cc.fp;
      else if (truth == c) ++cc.fn;
      else ++cc.tn;
    }
  }
  r.accuracy = ratio(correct, r.total);
  r.f1_real = r.per_class[0].f1();
  r.f1_fake = r.per_class[1].f1();
  r.macro_f1 = (r.f1_real + r.f1_fake) / 2.0;
  return r;
}

json metrics_to_json(const MetricsReport& r) {
  auto counts = [](const ClassCounts& c) { return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}}; };
  return {{"total", r.total},
          {"macF1", r.macro_f1},
          {"accuracy", r.accuracy},
          {"f1_real", r.f1_real},
          {"f1_fake", r.f1_fake},
          {"in_sample", r.in_sample},
          {"confusion", {{"real", counts(r.per_class[0])}, {"fake", counts(r.per_class[1])}}}};
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = std::string_view("variant").size();
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {:>7}  {:>8}  {:>7}  {:>7}  {:>6}\n", "variant", width, "macF1", "accuracy",
                                "F1_real", "F1_fake", "n");
  for (const auto& [name, r] : rows) {
    out += fmt::format("{:<{}}  {:>7.4f}  {:>8.4f}  {:>7.4f}  {:>7.4f}  {:>6}{}\n", name, width, r.macro_f1, r.accuracy,
                       r.f1_real, r.f1_fake, r.total, r.in_sample ? "  (in-sample)" : "");
  }
  return out;
}

Label decide(const std::array<double, 2>& probs) { return probs[1] > probs[0] ? Label::Fake : Label::Real; }

json prediction_to_json(const PredictionRecord& r) {
  json j{{"id", r.id}, {"prediction", std::string(to_string(r.prediction))}, {"p_fake", r.p_fake}};
  j["label"] = r.label ? json(std::string(to_string(*r.label))) : json(nullptr);
  return j;
}

void write_predictions_jsonl(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
  std::string text;
  for (const auto& r : records) text += prediction_to_json(r).dump() + "\n";
  write_text_atomic(path, text);
}

std::vector<PredictionRecord> read_predictions_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      const json j = json::parse(line);
      PredictionRecord r;
      r.id = j.at("id").get<std::string>();
      if (j.contains("label") && !j.at("label").is_null()) r.label = parse_label(j.at("label").get<std::string>());
      r.prediction = parse_label(j.at("prediction").get<std::string>());
      r.p_fake = j.at("p_fake").get<double>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw PreconditionError(fmt::format("{}:{}: malformed prediction: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

}  // namespace veridebate
