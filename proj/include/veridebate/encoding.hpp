#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veridebate/domain.hpp"
#include "veridebate/tensor.hpp"

namespace veridebate {

struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_id;
};

/// Text encoder behind a frozen interface. Implementations must be callable concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  /// Precondition: text is not blank.
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Lowercased ASCII alphanumeric runs; every non-ASCII code point is its own token.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic test encoder: a seeded random projection of token counts,
/// L2-normalized. Never fails on non-blank input.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim, std::uint64_t seed = 0);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct RemoteEmbeddingOptions {
  std::string endpoint;  // OpenAI-style /embeddings URL
  std::string model = "text-embedding-3-small";
  std::string api_key;
  std::size_t dim = 384;  // requested via the "dimensions" field and checked on return
  std::chrono::seconds timeout{60};
};

class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingOptions options);
  std::string id() const override;
  std::size_t dim() const override { return options_.dim; }
  EmbeddingVector embed(std::string_view text) override;

 private:
  RemoteEmbeddingOptions options_;
};

/// Disk cache keyed by (provider_id, text digest): <dir>/<2-hex>/<digest>.f32
/// holds little-endian float32 values, <digest>.json the {dim, provider_id} sidecar.
/// Values are always returned float32-rounded so cached and fresh results agree.
class CachedEmbeddingProvider final : public EmbeddingProvider {
 public:
  CachedEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path dir);
  std::string id() const override { return inner_->id(); }
  std::size_t dim() const override { return inner_->dim(); }
  EmbeddingVector embed(std::string_view text) override;

  std::uint64_t misses() const;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<double>> memory_;
  std::uint64_t misses_ = 0;
};

void write_f32_vector(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f32_vector(const std::filesystem::path& path);

/// Number of (role, stance) pairs carrying a trainable role embedding.
inline constexpr std::size_t kRoleKeys = 10;

std::size_t role_key(DebateRole role, Stance stance);

/// Role embeddings e (kRoleKeys x role_dim, row-major) and projection
/// W_role (text_dim x role_dim). Views alias the model's parameter vector.
struct RoleTableView {
  std::span<const double> embeddings;
  std::span<const double> projection;
  std::size_t text_dim = 0;
  std::size_t role_dim = 0;
};

struct RoleTable {
  std::size_t text_dim = 0;
  std::size_t role_dim = 0;
  std::vector<double> embeddings;
  std::vector<double> projection;

  /// Embeddings from uniform(-0.1, 0.1); projection from uniform(-1/sqrt(role_dim), ...).
  static RoleTable random(std::size_t text_dim, std::size_t role_dim, std::uint64_t seed);
  RoleTableView view() const;
};

using NodeVector = std::vector<double>;

/// out = W_role * e_key, or zeros when key is absent (a non-debate node).
void project_role(const RoleTableView& table, std::optional<std::size_t> key, std::span<double> out);

/// [emb ; W_role * e_(role, stance)] of length 2 * text_dim.
NodeVector build_node(const DebateTurn& turn, const EmbeddingVector& emb, const RoleTableView& table);

}  // namespace veridebate
