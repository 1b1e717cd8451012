#include "veridebate/config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "veridebate/errors.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

namespace pt = boost::property_tree;

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  debate.generation.seed = s;
  training.seed = s;
}

void PipelineConfig::validate() const {
  if (gateway.backend != "mock" && gateway.backend != "remote") {
    throw ConfigError(fmt::format("unknown backend '{}' (expected mock or remote)", gateway.backend));
  }
  if (gateway.max_concurrent < 1) throw ConfigError("gateway max_concurrent must be at least 1");
  if (gateway.requests_per_minute < 0) throw ConfigError("gateway requests_per_minute must be >= 0");
  if (gateway.max_attempts < 1) throw ConfigError("gateway max_attempts must be at least 1");
  if (embedding.provider != "hash" && embedding.provider != "remote") {
    throw ConfigError(fmt::format("unknown embedding provider '{}' (expected hash or remote)", embedding.provider));
  }
  if (embedding.dim != model.text_dim) throw ConfigError("embedding dim and model text_dim differ");
  try {
    debate.validate();
    training.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  model.validate();
}

namespace {

template <typename T>
T parse_value(const std::string& section, const std::string& key, const std::string& raw) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
      if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
      throw std::invalid_argument("not a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_floating_point_v<T>) {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return static_cast<T>(v);
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!raw.empty() && raw.front() == '-') throw std::invalid_argument("negative");
      std::size_t used = 0;
      const auto v = std::stoull(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return static_cast<T>(v);
    } else {
      std::size_t used = 0;
      const auto v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("[{}] {}: invalid value '{}'", section, key, raw));
  }
}

using Setter = std::function<void(const std::string& section, const std::string& key, const std::string& raw)>;

template <typename T>
Setter bind(T& field) {
  return [&field](const std::string& s, const std::string& k, const std::string& raw) {
    field = parse_value<T>(s, k, raw);
  };
}

template <typename T>
Setter bind_optional_path(std::optional<T>& field) {
  return [&field](const std::string&, const std::string&, const std::string& raw) { field = T(raw); };
}

template <typename F>
Setter bind_with(F convert) {
  return [convert](const std::string& s, const std::string& k, const std::string& raw) {
    try {
      convert(raw);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("[{}] {}: invalid value '{}'", s, k, raw));
    }
  };
}

}  // namespace

PipelineConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }

  PipelineConfig c;
  std::uint64_t seed = 0;
  bool seed_given = false;
  auto& g = c.gateway;
  auto& d = c.debate;
  auto& e = c.embedding;
  auto& m = c.model;
  auto& t = c.training;
  auto& p = c.paths;
  auto& ds = c.dataset;

  const std::map<std::string, std::map<std::string, Setter>> schema{
      {"gateway",
       {{"backend", bind(g.backend)},
        {"endpoint", bind(g.endpoint)},
        {"model", bind(g.model)},
        {"max_concurrent", bind(g.max_concurrent)},
        {"requests_per_minute", bind(g.requests_per_minute)},
        {"max_attempts", bind(g.max_attempts)},
        {"initial_backoff_ms", bind(g.initial_backoff_ms)},
        {"max_backoff_ms", bind(g.max_backoff_ms)},
        {"timeout_seconds", bind(g.timeout_seconds)},
        {"cache", bind(g.cache)},
        {"cache_dir", bind_optional_path(g.cache_dir)}}},
      {"debate",
       {{"agents_per_team", bind(d.agents_per_team)},
        {"temperature", bind(d.generation.temperature)},
        {"max_tokens", bind(d.generation.max_tokens)},
        {"history_budget_chars", bind(d.history_budget_chars)},
        {"language", bind_with([&](const std::string& v) { d.language = parse_language(v); })},
        {"order", bind_with([&](const std::string& v) {
           if (v == "proponent_first") d.order = SpeakingOrder::ProponentFirst;
           else if (v == "opponent_first") d.order = SpeakingOrder::OpponentFirst;
           else throw std::invalid_argument(v);
         })}}},
      {"embedding",
       {{"provider", bind(e.provider)},
        {"dim", bind(e.dim)},
        {"seed", bind(e.seed)},
        {"endpoint", bind(e.endpoint)},
        {"model", bind(e.model)},
        {"cache", bind(e.cache)},
        {"cache_dir", bind_optional_path(e.cache_dir)}}},
      {"model",
       {{"role_dim", bind(m.role_dim)},
        {"gat_layers", bind(m.gat_layers)},
        {"gat_hidden", bind(m.gat_hidden)},
        {"proj_dim", bind(m.proj_dim)},
        {"heads", bind(m.heads)},
        {"interaction_mode", bind_with([&](const std::string& v) { m.mode = parse_interaction_mode(v); })},
        {"learning_rate", bind(t.learning_rate)},
        {"epochs", bind(t.epochs)},
        {"batch_size", bind(t.batch_size)},
        {"seed", bind_with([&](const std::string& v) {
           seed = parse_value<std::uint64_t>("model", "seed", v);
           seed_given = true;
         })}}},
      {"paths",
       {{"dataset", bind_optional_path(p.dataset)},
        {"out", bind_with([&](const std::string& v) { p.out = v; })},
        {"transcripts", bind_optional_path(p.transcripts)},
        {"reports", bind_optional_path(p.reports)},
        {"checkpoints", bind_optional_path(p.checkpoints)},
        {"prompts", bind_optional_path(p.prompts)}}},
      {"dataset",
       {{"strict", bind(ds.strict)},
        {"language", bind_with([&](const std::string& v) { ds.language = parse_language(v); })},
        {"default_split", bind_with([&](const std::string& v) { ds.default_split = parse_split(v); })}}},
  };

  for (const auto& [section, body] : tree) {
    const auto sit = schema.find(section);
    if (sit == schema.end()) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(fmt::format("config: key '{}' outside any section", section));
      }
      throw ConfigError(fmt::format("config: unknown section [{}]", section));
    }
    for (const auto& [key, value] : body) {
      const auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw ConfigError(fmt::format("config: unknown key '{}' in [{}]", key, section));
      kit->second(section, key, value.get_value<std::string>());
    }
  }
  m.text_dim = e.dim;
  if (seed_given) c.set_seed(seed);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.what()));
  }
  return parse_config(text);
}

}  // namespace veridebate
