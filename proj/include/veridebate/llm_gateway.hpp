#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "veridebate/domain.hpp"

namespace veridebate {

enum class SpeakerKind { System, User };

struct ChatMessage {
  SpeakerKind kind = SpeakerKind::User;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

struct GenerationRequest {
  std::vector<ChatMessage> messages;
  GenerationSettings settings;

  /// Throws PreconditionError for an empty message list or a blank message.
  void validate() const;
  bool operator==(const GenerationRequest&) const = default;
};

struct GenerationResponse {
  std::string text;
  std::string backend_id;
  bool cached = false;
};

/// Order-sensitive canonical serialization; the input to cache_key.
std::string canonical_request_json(const GenerationRequest& req);

/// SHA-256 hex digest of the canonical serialization (64 chars, platform independent).
std::string cache_key(const GenerationRequest& req);

enum class GatewayErrorKind { Transport, RateLimited, Rejected, Malformed };

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  GatewayErrorKind kind() const { return kind_; }
  bool retryable() const { return kind_ == GatewayErrorKind::Transport || kind_ == GatewayErrorKind::RateLimited; }

 private:
  GatewayErrorKind kind_;
};

/// A raw text-generation backend. Implementations may be called concurrently.
class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const GenerationRequest& req) = 0;
};

/// Anything that turns a request into a response; Gateway is the production one.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual GenerationResponse generate(const GenerationRequest& req) = 0;
};

/// Deterministic phrase assembler seeded from a hash of (message texts, settings.seed).
class MockBackend final : public TextBackend {
 public:
  std::string id() const override { return "mock"; }
  std::string complete(const GenerationRequest& req) override;
};

struct RemoteChatOptions {
  std::string endpoint;  // full URL of an OpenAI-style chat-completions endpoint
  std::string model = "gpt-4o-mini";
  std::string api_key;
  std::chrono::seconds timeout{120};
};

/// HTTP chat-completion client. Maps 429 to RateLimited, 5xx and connection
/// failures to Transport, other non-2xx to Rejected and unparseable bodies to Malformed.
class RemoteChatBackend final : public TextBackend {
 public:
  explicit RemoteChatBackend(RemoteChatOptions options);
  std::string id() const override;
  std::string complete(const GenerationRequest& req) override;

 private:
  RemoteChatOptions options_;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{20000};

  void validate() const;
  /// Delay slept before the given 1-based attempt; zero for the first.
  std::chrono::milliseconds delay_before_attempt(int attempt) const;
};

struct RateLimits {
  int max_concurrent = 4;
  int requests_per_minute = 0;  // 0 disables the per-minute window
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;
using ClockFn = std::function<std::chrono::steady_clock::time_point()>;

/// Gateway-wide concurrency cap plus a sliding one-minute request window.
class RateLimiter {
 public:
  RateLimiter(RateLimits limits, ClockFn clock, SleepFn sleep);

  class Permit {
   public:
    explicit Permit(RateLimiter* owner) : owner_(owner) {}
    Permit(Permit&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit();

   private:
    RateLimiter* owner_;
  };

  Permit acquire();
  int in_flight() const;

 private:
  void release();

  RateLimits limits_;
  ClockFn clock_;
  SleepFn sleep_;
  mutable std::mutex mutex_;
  std::condition_variable slot_freed_;
  int active_ = 0;
  std::deque<std::chrono::steady_clock::time_point> window_;
};

/// Content-addressed response cache: <dir>/<first-2-hex>/<digest>.json.
/// Without a directory it lives in memory only.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir);

  std::optional<std::string> get(const std::string& digest);
  void put(const std::string& digest, const std::string& text, const std::string& backend_id);
  std::optional<std::filesystem::path> path_for(const std::string& digest) const;

 private:
  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, std::string> memory_;
};

struct GatewayOptions {
  RetryPolicy retry;
  RateLimits limits;
  bool cache_enabled = false;
  std::optional<std::filesystem::path> cache_dir;
  SleepFn sleep;  // defaults to std::this_thread::sleep_for
  ClockFn clock;  // defaults to steady_clock::now
};

struct GatewayStats {
  std::uint64_t backend_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
  std::uint64_t failures = 0;
};

/// Thread-safe front door to a backend: caching, in-flight deduplication,
/// bounded retry with nondecreasing backoff, and rate limiting.
class Gateway final : public TextGenerator {
 public:
  explicit Gateway(std::shared_ptr<TextBackend> backend, GatewayOptions options = {});

  GenerationResponse generate(const GenerationRequest& req) override;
  GatewayStats stats() const;
  const TextBackend& backend() const { return *backend_; }

 private:
  std::string call_with_retry(const GenerationRequest& req);

  std::shared_ptr<TextBackend> backend_;
  GatewayOptions options_;
  RateLimiter limiter_;
  std::unique_ptr<ResponseCache> cache_;
  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<std::string>> inflight_;
  mutable std::mutex stats_mutex_;
  GatewayStats stats_;
};

}  // namespace veridebate
