#include "veridebate/encoding.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "detail/http.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/hashing.hpp"
#include "veridebate/llm_gateway.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) {
        current.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
      ++i;
      continue;
    }
    flush();
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, text.size() - i);
    tokens.emplace_back(text.substr(i, len));
    i += len;
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------- hash provider

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashEmbeddingProvider::id() const { return fmt::format("hash-d{}-s{}", dim_, seed_); }

EmbeddingVector HashEmbeddingProvider::embed(std::string_view text) {
  if (is_blank(text)) throw PreconditionError("cannot embed empty text");
  std::map<std::string, int> counts;
  for (auto& tok : tokenize(text)) ++counts[tok];

  std::vector<double> v(dim_, 0.0);
  const std::uint64_t salt = splitmix64(seed_);
  for (const auto& [tok, count] : counts) {
    const std::uint64_t base = fnv1a64(tok) ^ salt;
    for (std::size_t d = 0; d < dim_; ++d) {
      const double r = 2.0 * unit_interval(splitmix64(base + d * 0x9e3779b97f4a7c15ULL)) - 1.0;
      v[d] += static_cast<double>(count) * r;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return {std::move(v), id()};
}

// ---------------------------------------------------------------- remote provider

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ConfigError("remote embedding provider requires an endpoint URL");
  if (options_.dim == 0) throw ConfigError("embedding dimension must be positive");
  detail::parse_url(options_.endpoint);
}

std::string RemoteEmbeddingProvider::id() const { return fmt::format("remote:{}:d{}", options_.model, options_.dim); }

EmbeddingVector RemoteEmbeddingProvider::embed(std::string_view text) {
  if (is_blank(text)) throw PreconditionError("cannot embed empty text");
  json body{{"model", options_.model}, {"input", std::string(text)}, {"dimensions", options_.dim}};
  const auto reply = detail::post_json(options_.endpoint, options_.api_key, body.dump(), options_.timeout);
  detail::raise_for_status(reply);
  std::vector<double> values;
  try {
    values = json::parse(reply.body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw GatewayError(GatewayErrorKind::Malformed, fmt::format("unparseable embedding response: {}", e.what()));
  }
  if (values.size() != options_.dim) {
    throw GatewayError(GatewayErrorKind::Malformed,
                       fmt::format("embedding has {} values, expected {}", values.size(), options_.dim));
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw GatewayError(GatewayErrorKind::Malformed, "embedding contains non-finite values");
  }
  return {std::move(values), id()};
}

// ---------------------------------------------------------------- float32 files

void write_f32_vector(const std::filesystem::path& path, std::span<const double> values) {
  std::string bytes;
  bytes.reserve(values.size() * 4);
  for (double x : values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  write_text_atomic(path, bytes);
}

std::vector<double> read_f32_vector(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  if (bytes.size() % 4 != 0) throw std::runtime_error(fmt::format("{} is not a float32 vector", path.string()));
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

// ---------------------------------------------------------------- cached provider

CachedEmbeddingProvider::CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  if (!inner_) throw ConfigError("cached embedding provider needs an inner provider");
  std::filesystem::create_directories(dir_);
}

EmbeddingVector CachedEmbeddingProvider::embed(std::string_view text) {
  if (is_blank(text)) throw PreconditionError("cannot embed empty text");
  const std::string digest = sha256_hex(inner_->id() + '\x1f' + std::string(text));
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(digest); it != memory_.end()) return {it->second, inner_->id()};
  }
  const auto stem = dir_ / digest.substr(0, 2) / digest;
  const auto vec_path = std::filesystem::path(stem.string() + ".f32");
  const auto meta_path = std::filesystem::path(stem.string() + ".json");
  std::vector<double> values;
  if (std::filesystem::exists(vec_path) && std::filesystem::exists(meta_path)) {
    try {
      const json meta = json::parse(read_text(meta_path));
      values = read_f32_vector(vec_path);
      if (meta.at("dim").get<std::size_t>() != inner_->dim() || values.size() != inner_->dim() ||
          meta.at("provider_id").get<std::string>() != inner_->id()) {
        values.clear();
      }
    } catch (const std::exception&) {
      values.clear();
    }
  }
  if (values.empty()) {
    EmbeddingVector fresh = inner_->embed(text);
    write_f32_vector(vec_path, fresh.values);
    write_text_atomic(meta_path, json{{"dim", fresh.values.size()}, {"provider_id", inner_->id()}}.dump());
    values.reserve(fresh.values.size());
    for (double x : fresh.values) values.push_back(static_cast<double>(static_cast<float>(x)));
    std::lock_guard lock(mutex_);
    ++misses_;
  }
  std::lock_guard lock(mutex_);
  memory_.emplace(digest, values);
  return {std::move(values), inner_->id()};
}

std::uint64_t CachedEmbeddingProvider::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

// ---------------------------------------------------------------- role table

std::size_t role_key(DebateRole role, Stance stance) {
  return static_cast<std::size_t>(role) * 2 + (stance == Stance::True ? 0 : 1);
}

RoleTable RoleTable::random(std::size_t text_dim, std::size_t role_dim, std::uint64_t seed) {
  if (text_dim == 0 || role_dim == 0) throw PreconditionError("role table dimensions must be positive");
  std::mt19937_64 rng(seed);
  auto uniform = [&](double s) { return (2.0 * unit_interval(rng()) - 1.0) * s; };
  RoleTable t;
  t.text_dim = text_dim;
  t.role_dim = role_dim;
  t.embeddings.resize(kRoleKeys * role_dim);
  for (double& x : t.embeddings) x = uniform(0.1);
  t.projection.resize(text_dim * role_dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(role_dim));
  for (double& x : t.projection) x = uniform(s);
  return t;
}

RoleTableView RoleTable::view() const { return {embeddings, projection, text_dim, role_dim}; }

void project_role(const RoleTableView& table, std::optional<std::size_t> key, std::span<double> out) {
  if (out.size() != table.text_dim) throw DimensionError("role projection output has the wrong length");
  if (!key) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (*key >= kRoleKeys) throw PreconditionError(fmt::format("unknown role key {}", *key));
  const double* e = table.embeddings.data() + *key * table.role_dim;
  for (std::size_t r = 0; r < table.text_dim; ++r) {
    const double* w = table.projection.data() + r * table.role_dim;
    double acc = 0.0;
    for (std::size_t k = 0; k < table.role_dim; ++k) acc += w[k] * e[k];
    out[r] = acc;
  }
}

NodeVector build_node(const DebateTurn& turn, const EmbeddingVector& emb, const RoleTableView& table) {
  if (emb.values.size() != table.text_dim) {
    throw DimensionError(fmt::format("embedding has dimension {}, expected {}", emb.values.size(), table.text_dim));
  }
  if (table.embeddings.size() != kRoleKeys * table.role_dim || table.projection.size() != table.text_dim * table.role_dim) {
    throw DimensionError("role table storage does not match its dimensions");
  }
  if (!role_legal_in_stage(turn.role, turn.stage)) {
    throw PreconditionError(fmt::format("role {} is not legal in stage {}", to_string(turn.role), to_string(turn.stage)));
  }
  NodeVector node(2 * table.text_dim);
  std::copy(emb.values.begin(), emb.values.end(), node.begin());
  project_role(table, role_key(turn.role, turn.stance), std::span<double>(node).subspan(table.text_dim));
  return node;
}

}  // namespace veridebate
