#include "veridebate/app.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "veridebate/checkpoint.hpp"
#include "veridebate/debate_engine.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/metrics.hpp"
#include "veridebate/serialization.hpp"
#include "veridebate/synthesis.hpp"

namespace veridebate {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_run_id(std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &utc);
  return fmt::format("{}-s{}", stamp, seed);
}

namespace {

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError(fmt::format("cannot create directory {}: {}", dir.string(),
                                  ec ? ec.message() : "not a directory"));
  }
  return dir;
}

std::string require_api_key() {
  const char* key = std::getenv(kApiKeyEnv);
  if (!key || !*key) throw ConfigError(fmt::format("remote backend needs the {} environment variable", kApiKeyEnv));
  return key;
}

}  // namespace

RunWorkspace RunWorkspace::open(const PipelineConfig& config) {
  RunWorkspace ws;
  const std::string run_id = config.run_id.empty() ? default_run_id(config.seed) : config.run_id;
  ws.root = ensure_dir(config.paths.out / run_id);
  ws.transcripts = ensure_dir(config.paths.transcripts.value_or(ws.root / "transcripts"));
  ws.reports = ensure_dir(config.paths.reports.value_or(ws.root / "reports"));
  ws.checkpoints = ensure_dir(config.paths.checkpoints.value_or(ws.root / "checkpoints"));
  ws.response_cache = config.gateway.cache_dir.value_or(ws.root / "cache" / "responses");
  ws.embedding_cache = config.embedding.cache_dir.value_or(ws.root / "cache" / "embeddings");
  if (config.gateway.cache) ensure_dir(ws.response_cache);
  if (config.embedding.cache) ensure_dir(ws.embedding_cache);
  return ws;
}

std::shared_ptr<TextBackend> make_backend(const PipelineConfig& config) {
  const auto& g = config.gateway;
  if (g.backend == "mock") return std::make_shared<MockBackend>();
  if (g.backend == "remote") {
    RemoteChatOptions o;
    o.endpoint = g.endpoint;
    o.model = g.model;
    o.api_key = require_api_key();
    o.timeout = std::chrono::seconds(g.timeout_seconds);
    return std::make_shared<RemoteChatBackend>(std::move(o));
  }
  throw ConfigError(fmt::format("unknown backend '{}'", g.backend));
}

std::shared_ptr<Gateway> make_gateway(const PipelineConfig& config, const RunWorkspace& ws) {
  const auto& g = config.gateway;
  GatewayOptions o;
  o.retry.max_attempts = g.max_attempts;
  o.retry.initial_backoff = std::chrono::milliseconds(g.initial_backoff_ms);
  o.retry.max_backoff = std::chrono::milliseconds(g.max_backoff_ms);
  o.limits.max_concurrent = g.max_concurrent;
  o.limits.requests_per_minute = g.requests_per_minute;
  o.cache_enabled = g.cache;
  if (g.cache) o.cache_dir = ws.response_cache;
  return std::make_shared<Gateway>(make_backend(config), std::move(o));
}

std::shared_ptr<EmbeddingProvider> make_embedder(const PipelineConfig& config, const RunWorkspace& ws) {
  const auto& e = config.embedding;
  std::shared_ptr<EmbeddingProvider> inner;
  if (e.provider == "hash") {
    inner = std::make_shared<HashEmbeddingProvider>(e.dim, e.seed);
  } else if (e.provider == "remote") {
    RemoteEmbeddingOptions o;
    o.endpoint = e.endpoint;
    o.model = e.model;
    o.api_key = require_api_key();
    o.dim = e.dim;
    inner = std::make_shared<RemoteEmbeddingProvider>(std::move(o));
  } else {
    throw ConfigError(fmt::format("unknown embedding provider '{}'", e.provider));
  }
  if (!e.cache) return inner;
  return std::make_shared<CachedEmbeddingProvider>(std::move(inner), ws.embedding_cache);
}

// ---------------------------------------------------------------- application

Application::Application(PipelineConfig config)
    : config_((config.validate(), std::move(config))),
      ws_(RunWorkspace::open(config_)),
      prompts_(config_.paths.prompts ? PromptLibrary::with_overrides(*config_.paths.prompts) : PromptLibrary::builtin()),
      gateway_(make_gateway(config_, ws_)),
      embedder_(make_embedder(config_, ws_)),
      transcripts_(ws_.transcripts),
      reports_(ws_.reports) {}

Dataset Application::load_dataset() const {
  if (!config_.paths.dataset) throw ConfigError("no dataset given (use --dataset or [paths] dataset)");
  LoadOptions o;
  o.strict = config_.dataset.strict;
  o.language = config_.dataset.language;
  o.default_split = config_.dataset.default_split;
  Dataset data = veridebate::load_dataset(*config_.paths.dataset, o);
  for (const auto& issue : data.skipped) {
    spdlog::warn("{}:{}: skipped: {}", config_.paths.dataset->string(), issue.line, issue.message);
  }
  return data;
}

DebateLog Application::debate_for(const NewsItem& item) {
  if (auto log = transcripts_.load_log(item.id)) return *std::move(log);
  DebateLog log = run_debate(item, config_.debate, *gateway_, prompts_);
  transcripts_.save(log);
  return log;
}

SummaryReport Application::report_for(const NewsItem& item, const DebateLog& log) {
  if (auto report = reports_.load_report(item.id)) return *std::move(report);
  SynthesisOptions o;
  o.language = config_.debate.language;
  o.generation = config_.debate.generation;
  o.history_budget_chars = config_.debate.history_budget_chars;
  SummaryReport report = synthesize(item, log, *gateway_, o, prompts_);
  reports_.save(report);
  return report;
}

Pipeline Application::make_pipeline(std::optional<fs::path> output_dir) {
  PipelineOptions o;
  o.model = config_.model;
  o.training = config_.training;
  o.model_seed = config_.seed;
  o.output_dir = std::move(output_dir);
  o.transcripts_dir = ws_.transcripts;
  o.reports_dir = ws_.reports;
  return Pipeline(
      std::move(o), [this](const NewsItem& item) { return debate_for(item); },
      [this](const NewsItem& item, const DebateLog& log) { return report_for(item, log); }, embedder_);
}

// ---------------------------------------------------------------- commands

namespace {

int exit_code_for(const PipelineConfig& config, std::size_t failed) {
  return failed > 0 && config.dataset.strict ? 1 : 0;
}

// Runs fn(item) over items on up to `workers` threads; returns per-item failure messages.
template <typename F>
std::vector<std::optional<std::string>> for_each_item(const std::vector<NewsItem>& items, int workers, F fn) {
  std::vector<std::optional<std::string>> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < items.size(); k = next++) {
      try {
        fn(items[k]);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max(workers, 1), items.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return errors;
}

void tally(CommandOutcome& out, const std::vector<NewsItem>& items,
           const std::vector<std::optional<std::string>>& errors, const char* what) {
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (!errors[k]) continue;
    ++out.failed;
    spdlog::error("{} failed for item {}: {}", what, items[k].id, *errors[k]);
  }
}

}  // namespace

CommandOutcome cmd_debate(const PipelineConfig& config) {
  Application app(config);
  const Dataset data = app.load_dataset();
  CommandOutcome out;
  std::atomic<std::size_t> processed{0}, skipped{0};
  JsonStore store(app.workspace().transcripts);
  const auto errors = for_each_item(data.items, config.gateway.max_concurrent, [&](const NewsItem& item) {
    if (store.contains(item.id)) {
      ++skipped;
      return;
    }
    app.debate_for(item);
    ++processed;
  });
  out.processed = processed;
  out.skipped = skipped;
  tally(out, data.items, errors, "debate");
  out.gateway = app.gateway().stats();
  out.exit_code = exit_code_for(config, out.failed);
  out.output = app.workspace().transcripts;
  spdlog::info("debate: {} written, {} skipped, {} failed, {} backend calls", out.processed, out.skipped, out.failed,
               out.gateway.backend_calls);
  return out;
}

CommandOutcome cmd_synthesize(const PipelineConfig& config) {
  Application app(config);
  const Dataset data = app.load_dataset();
  CommandOutcome out;
  std::atomic<std::size_t> processed{0}, skipped{0};
  JsonStore transcripts(app.workspace().transcripts);
  JsonStore reports(app.workspace().reports);
  const auto errors = for_each_item(data.items, config.gateway.max_concurrent, [&](const NewsItem& item) {
    if (reports.contains(item.id)) {
      ++skipped;
      return;
    }
    const auto log = transcripts.load_log(item.id);
    if (!log) throw PreconditionError(fmt::format("no transcript at {}", transcripts.path_for(item.id).string()));
    app.report_for(item, *log);
    ++processed;
  });
  out.processed = processed;
  out.skipped = skipped;
  tally(out, data.items, errors, "synthesis");
  out.gateway = app.gateway().stats();
  out.exit_code = exit_code_for(config, out.failed);
  out.output = app.workspace().reports;
  spdlog::info("synthesize: {} written, {} skipped, {} failed", out.processed, out.skipped, out.failed);
  return out;
}

CommandOutcome cmd_train(const PipelineConfig& config) {
  Application app(config);
  const Dataset data = app.load_dataset();
  const Pipeline pipeline = app.make_pipeline(std::nullopt);
  const auto train_items = data.split(Split::Train);
  if (train_items.empty()) throw StageError("train", "no training items");
  const auto val_items = data.split(Split::Val);

  auto encode_all = [&](const std::vector<NewsItem>& items) {
    std::vector<GraphSample> samples;
    for (const auto& item : items) {
      const DebateLog log = app.debate_for(item);
      samples.push_back(pipeline.encode(item, &log));
    }
    return samples;
  };
  const auto train_set = encode_all(train_items);
  const auto val_set = encode_all(val_items);

  AnalysisModel model(config.model, config.seed);
  TrainConfig tc = config.training;
  tc.on_epoch = [](const EpochReport& r) {
    if (r.val_macro_f1) {
      spdlog::info("epoch {}: loss {:.6f} val macF1 {:.4f}", r.epoch, r.train_loss, *r.val_macro_f1);
    } else {
      spdlog::info("epoch {}: loss {:.6f}", r.epoch, r.train_loss);
    }
  };
  const TrainResult result = train(model, train_set, val_set, tc);

  CommandOutcome out;
  out.processed = train_set.size();
  out.gateway = app.gateway().stats();
  out.output = app.workspace().checkpoints / "model.ckpt";
  save_checkpoint(*out.output, model,
                  {{"best_epoch", result.best_epoch},
                   {"loss_history", result.loss_history},
                   {"embedding", config.embedding.provider},
                   {"embedding_seed", config.embedding.seed}});
  spdlog::info("train: checkpoint written to {}", out.output->string());
  return out;
}

CommandOutcome cmd_predict(const PipelineConfig& config, const fs::path& checkpoint, const fs::path& predictions_out) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint);
  if (loaded.model.config().text_dim != config.embedding.dim) {
    throw ConfigError(fmt::format("checkpoint expects text_dim {}, embedding dim is {}", loaded.model.config().text_dim,
                                  config.embedding.dim));
  }
  PipelineConfig for_model = config;
  for_model.model = loaded.model.config();
  Application scorer(std::move(for_model));
  const Dataset data = scorer.load_dataset();
  const Pipeline pipeline = scorer.make_pipeline(std::nullopt);

  std::vector<NewsItem> items = data.split(Split::Test);
  if (items.empty()) items = data.items;

  CommandOutcome out;
  std::vector<GraphSample> samples;
  for (const auto& item : items) {
    const DebateLog log = scorer.debate_for(item);
    samples.push_back(pipeline.encode(item, &log));
  }
  const auto probs = predict_all(loaded.model, samples, config.training.exec);
  std::vector<PredictionRecord> records;
  for (std::size_t k = 0; k < items.size(); ++k) {
    records.push_back({items[k].id, items[k].label, decide(probs[k]), probs[k][1]});
  }
  if (predictions_out.has_parent_path()) ensure_dir(predictions_out.parent_path());
  write_predictions_jsonl(predictions_out, records);
  out.processed = records.size();
  out.gateway = scorer.gateway().stats();
  out.output = predictions_out;
  spdlog::info("predict: {} predictions written to {}", records.size(), predictions_out.string());
  return out;
}

CommandOutcome cmd_evaluate(const fs::path& predictions) {
  const auto records = read_predictions_jsonl(predictions);
  std::vector<Label> predicted, truth;
  for (const auto& r : records) {
    if (!r.label) throw PreconditionError(fmt::format("prediction for {} has no label", r.id));
    predicted.push_back(r.prediction);
    truth.push_back(*r.label);
  }
  const MetricsReport report = compute_metrics(predicted, truth);
  fs::path base = predictions;
  base.replace_extension();
  const fs::path json_path = base.string() + ".metrics.json";
  write_text_atomic(json_path, metrics_to_json(report).dump(2) + "\n");
  write_text_atomic(base.string() + ".metrics.txt", metrics_table({{base.filename().string(), report}}));
  CommandOutcome out;
  out.processed = records.size();
  out.output = json_path;
  spdlog::info("evaluate: macF1 {:.4f} accuracy {:.4f} over {} items", report.macro_f1, report.accuracy, report.total);
  return out;
}

CommandOutcome cmd_pipeline(const PipelineConfig& config) {
  Application app(config);
  const Dataset data = app.load_dataset();
  const Pipeline pipeline = app.make_pipeline(app.workspace().root);
  const PipelineResult result = pipeline.run(data, AblationToggle::Full);
  CommandOutcome out;
  out.processed = result.predictions.size();
  out.gateway = app.gateway().stats();
  out.output = app.workspace().root / result.variant / "metrics.json";
  spdlog::info("pipeline: macF1 {:.4f} accuracy {:.4f}{}; outputs in {}", result.metrics.macro_f1,
               result.metrics.accuracy, result.metrics.in_sample ? " (in-sample)" : "",
               (app.workspace().root / result.variant).string());
  return out;
}

CommandOutcome cmd_ablate(const PipelineConfig& config, const std::vector<AblationToggle>& variants) {
  if (variants.empty()) throw ConfigError("no ablation variants given");
  Application app(config);
  const Dataset data = app.load_dataset();
  const Pipeline pipeline = app.make_pipeline(app.workspace().root);
  std::vector<std::pair<std::string, MetricsReport>> rows;
  json j = json::array();
  for (auto v : variants) {
    const PipelineResult result = pipeline.run(data, v);
    rows.emplace_back(result.variant, result.metrics);
    j.push_back({{"variant", result.variant}, {"metrics", metrics_to_json(result.metrics)}});
  }
  CommandOutcome out;
  out.processed = rows.size();
  out.gateway = app.gateway().stats();
  out.output = app.workspace().root / "ablation.json";
  write_text_atomic(*out.output, j.dump(2) + "\n");
  const std::string table = metrics_table(rows);
  write_text_atomic(app.workspace().root / "ablation.txt", table);
  spdlog::info("ablation:\n{}", table);
  return out;
}

}  // namespace veridebate
