#include "veridebate/pipeline.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <json.hpp>

#include "veridebate/checkpoint.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/hashing.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

using nlohmann::json;

std::string_view to_string(AblationToggle t) {
  switch (t) {
    case AblationToggle::Full: return "full";
    case AblationToggle::NoDebate: return "no_debate";
    case AblationToggle::NoSynthesis: return "no_synthesis";
    case AblationToggle::NoAnalysis: return "no_analysis";
  }
  return "full";
}

AblationToggle parse_toggle(std::string_view name) {
  for (auto t : {AblationToggle::Full, AblationToggle::NoDebate, AblationToggle::NoSynthesis, AblationToggle::NoAnalysis}) {
    if (name == to_string(t)) return t;
  }
  throw ConfigError(fmt::format("unknown ablation toggle '{}' (expected full, no_debate, no_synthesis or no_analysis)", name));
}

StageError::StageError(std::string stage, const std::string& cause)
    : std::runtime_error(fmt::format("{} stage failed: {}", stage, cause)), stage_(std::move(stage)) {}

std::string safe_file_stem(std::string_view id) {
  std::string out;
  bool changed = id.empty();
  for (char c : id) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '-' || c == '_' || c == '.') {
      out.push_back(c);
    } else {
      out.push_back('_');
      changed = true;
    }
  }
  if (!out.empty() && out.front() == '.') {
    out.front() = '_';
    changed = true;
  }
  if (changed) out += fmt::format("-{:08x}", static_cast<std::uint32_t>(fnv1a64(id)));
  return out;
}

// ---------------------------------------------------------------- store

JsonStore::JsonStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw ConfigError(fmt::format("cannot create directory {}: {}", dir_.string(), ec.message()));
  }
}

std::filesystem::path JsonStore::path_for(std::string_view id) const { return dir_ / (safe_file_stem(id) + ".json"); }

bool JsonStore::contains(std::string_view id) const { return std::filesystem::exists(path_for(id)); }

std::optional<DebateLog> JsonStore::load_log(std::string_view id) const {
  if (!contains(id)) return std::nullopt;
  return json::parse(read_text(path_for(id))).get<DebateLog>();
}

void JsonStore::save(const DebateLog& log) const { write_text_atomic(path_for(log.news_id), json(log).dump(2) + "\n"); }

std::optional<SummaryReport> JsonStore::load_report(std::string_view id) const {
  if (!contains(id)) return std::nullopt;
  return json::parse(read_text(path_for(id))).get<SummaryReport>();
}

void JsonStore::save(const SummaryReport& report) const {
  write_text_atomic(path_for(report.news_id), json(report).dump(2) + "\n");
}

// ---------------------------------------------------------------- pipeline

Label label_from_hint(std::optional<VerdictHint> hint) {
  return hint == VerdictHint::LeansFake ? Label::Fake : Label::Real;
}

Pipeline::Pipeline(PipelineOptions options, DebateSource debates, ReportSource reports,
                   std::shared_ptr<EmbeddingProvider> embedder)
    : options_(std::move(options)), debates_(std::move(debates)), reports_(std::move(reports)),
      embedder_(std::move(embedder)) {
  if (!embedder_) throw ConfigError("pipeline needs an embedding provider");
  options_.model.validate();
  options_.training.validate();
  if (embedder_->dim() != options_.model.text_dim) {
    throw ConfigError(fmt::format("embedding dimension {} does not match model text_dim {}", embedder_->dim(),
                                  options_.model.text_dim));
  }
}

GraphSample Pipeline::encode(const NewsItem& item, const DebateLog* debate) const {
  GraphSample s;
  s.id = item.id;
  s.label = item.label;
  s.news_embedding = embedder_->embed(item.content).values;
  const std::size_t d = options_.model.text_dim;
  if (!debate) {
    s.graph = single_node_graph();
    s.text_embeddings = Matrix(1, d);
    std::copy(s.news_embedding.begin(), s.news_embedding.end(), s.text_embeddings.row(0).begin());
    return s;
  }
  s.graph = build_topology(*debate);
  s.text_embeddings = Matrix(debate->turns.size(), d);
  for (std::size_t i = 0; i < debate->turns.size(); ++i) {
    const auto e = embedder_->embed(debate->turns[i].text).values;
    if (e.size() != d) throw DimensionError(fmt::format("embedding has dimension {}, expected {}", e.size(), d));
    std::copy(e.begin(), e.end(), s.text_embeddings.row(i).begin());
  }
  return s;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

PipelineResult Pipeline::run(const Dataset& data, AblationToggle toggle) const {
  return run(data, toggle, to_string(toggle));
}

PipelineResult Pipeline::run(const Dataset& data, AblationToggle toggle, std::string_view name) const {
  PipelineResult result;
  result.variant = std::string(name);

  std::vector<NewsItem> train_items = data.split(Split::Train);
  const std::vector<NewsItem> val_items = data.split(Split::Val);
  std::vector<NewsItem> eval_items = data.split(Split::Test);
  const bool in_sample = eval_items.empty();
  if (toggle != AblationToggle::NoAnalysis && train_items.empty()) throw StageError("train", "no training items");
  if (in_sample) eval_items = train_items.empty() ? data.items : train_items;
  if (eval_items.empty()) throw StageError("evaluate", "no items to evaluate");

  const bool use_debate = toggle != AblationToggle::NoDebate;
  const bool use_synthesis = toggle == AblationToggle::Full || toggle == AblationToggle::NoAnalysis;
  const bool use_model = toggle != AblationToggle::NoAnalysis;

  // debate
  std::map<std::string, DebateLog> logs;
  if (use_debate) {
    stage("debate", [&] {
      auto collect = [&](const std::vector<NewsItem>& items) {
        for (const auto& item : items) {
          if (logs.count(item.id)) continue;
          logs.emplace(item.id, debates_(item));
          ++result.debates_requested;
        }
      };
      if (use_model) {
        collect(train_items);
        collect(val_items);
      }
      collect(eval_items);
      return 0;
    });
  }

  // synthesize
  std::map<std::string, SummaryReport> reports;
  if (use_synthesis) {
    stage("synthesize", [&] {
      for (const auto& item : eval_items) {
        reports.emplace(item.id, reports_(item, logs.at(item.id)));
        ++result.reports_requested;
      }
      return 0;
    });
  }

  std::vector<std::array<double, 2>> probs;
  if (use_model) {
    auto encode_all = [&](const std::vector<NewsItem>& items) {
      std::vector<GraphSample> out;
      out.reserve(items.size());
      for (const auto& item : items) out.push_back(encode(item, use_debate ? &logs.at(item.id) : nullptr));
      return out;
    };
    std::vector<GraphSample> train_set, val_set, eval_set;
    stage("encode", [&] {
      train_set = encode_all(train_items);
      val_set = encode_all(val_items);
      eval_set = in_sample ? train_set : encode_all(eval_items);
      return 0;
    });

    AnalysisModel model(options_.model, options_.model_seed);
    TrainConfig tc = options_.training;
    if (options_.zero_role_table) {
      for (const char* block : {"role.embeddings", "role.projection"}) {
        auto v = model.block(block).flat();
        std::fill(v.begin(), v.end(), 0.0);
        tc.frozen_blocks.emplace_back(block);
      }
    }
    result.training = stage("train", [&] { return train(model, train_set, val_set, tc); });
    probs = stage("predict", [&] { return predict_all(model, eval_set, tc.exec); });
    if (options_.output_dir) {
      const auto dir = *options_.output_dir / result.variant;
      std::filesystem::create_directories(dir);
      save_checkpoint(dir / "model.ckpt", model, {{"variant", result.variant}});
    }
  } else {
    for (const auto& item : eval_items) {
      const auto hint = reports.at(item.id).verdict_hint;
      const double p_fake = hint == VerdictHint::LeansFake ? 1.0 : (hint == VerdictHint::LeansReal ? 0.0 : 0.5);
      probs.push_back({1.0 - p_fake, p_fake});
    }
  }

  std::vector<Label> predicted, truth;
  for (std::size_t k = 0; k < eval_items.size(); ++k) {
    const auto& item = eval_items[k];
    PredictionRecord rec;
    rec.id = item.id;
    rec.label = item.label;
    rec.prediction = use_model ? decide(probs[k]) : label_from_hint(reports.at(item.id).verdict_hint);
    rec.p_fake = probs[k][1];
    result.predictions.push_back(rec);
    if (!item.label) throw StageError("evaluate", fmt::format("item {} has no label", item.id));
    predicted.push_back(rec.prediction);
    truth.push_back(*item.label);
  }
  result.metrics = stage("evaluate", [&] { return compute_metrics(predicted, truth); });
  result.metrics.in_sample = in_sample;

  if (options_.output_dir) {
    const auto dir = *options_.output_dir / result.variant;
    std::filesystem::create_directories(dir);
    write_predictions_jsonl(dir / "predictions.jsonl", result.predictions);

    std::string explanations;
    for (const auto& rec : result.predictions) {
      json j = prediction_to_json(rec);
      j["transcript"] = nullptr;
      j["report"] = nullptr;
      if (use_debate && options_.transcripts_dir) {
        j["transcript"] = (*options_.transcripts_dir / (safe_file_stem(rec.id) + ".json")).string();
      }
      if (use_synthesis) {
        if (options_.reports_dir) j["report"] = (*options_.reports_dir / (safe_file_stem(rec.id) + ".json")).string();
        const auto& hint = reports.at(rec.id).verdict_hint;
        j["verdict_hint"] = hint ? json(std::string(to_string(*hint))) : json(nullptr);
      }
      explanations += j.dump() + "\n";
    }
    write_text_atomic(dir / "explanations.jsonl", explanations);

    json summary{{"variant", result.variant}, {"metrics", metrics_to_json(result.metrics)}};
    if (result.training) {
      summary["training"] = {{"epochs", result.training->loss_history.size()},
                             {"best_epoch", result.training->best_epoch},
                             {"loss_history", result.training->loss_history},
                             {"val_macF1_history", result.training->val_macro_f1_history}};
    }
    write_text_atomic(dir / "metrics.json", summary.dump(2) + "\n");
    write_text_atomic(dir / "metrics.txt", metrics_table({{result.variant, result.metrics}}));
  }
  return result;
}

std::vector<std::pair<std::string, MetricsReport>> run_ablation(std::span<const AblationToggle> toggles,
                                                                const Pipeline& pipeline, const Dataset& data) {
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (auto t : toggles) rows.emplace_back(std::string(to_string(t)), pipeline.run(data, t).metrics);
  return rows;
}

}  // namespace veridebate
