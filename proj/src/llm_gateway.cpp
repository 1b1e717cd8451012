#include "veridebate/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "detail/http.hpp"
#include "veridebate/errors.hpp"
#include "veridebate/hashing.hpp"
#include "veridebate/serialization.hpp"

namespace veridebate {

using nlohmann::json;

void GenerationRequest::validate() const {
  if (messages.empty()) throw PreconditionError("generation request has no messages");
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (is_blank(messages[i].text)) {
      throw PreconditionError(fmt::format("generation request message {} is empty", i));
    }
  }
  if (!(settings.temperature >= 0.0)) throw PreconditionError("temperature must be >= 0");
}

std::string canonical_request_json(const GenerationRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"kind", m.kind == SpeakerKind::System ? "system" : "user"}, {"text", m.text}});
  }
  json doc{{"messages", std::move(messages)},
           {"settings",
            {{"temperature", req.settings.temperature},
             {"max_tokens", req.settings.max_tokens},
             {"seed", req.settings.seed}}}};
  return doc.dump();
}

std::string cache_key(const GenerationRequest& req) { return sha256_hex(canonical_request_json(req)); }

// ---------------------------------------------------------------- retry policy

void RetryPolicy::validate() const {
  if (max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
  if (multiplier < 1.0) throw ConfigError("retry multiplier must be >= 1 (backoff must not shrink)");
  if (initial_backoff.count() < 0 || max_backoff < initial_backoff) {
    throw ConfigError("retry backoff bounds are inconsistent");
  }
}

std::chrono::milliseconds RetryPolicy::delay_before_attempt(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds{0};
  const double raw = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, attempt - 2);
  const double capped = std::min(raw, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds{static_cast<std::int64_t>(capped)};
}

// ---------------------------------------------------------------- rate limiter

RateLimiter::RateLimiter(RateLimits limits, ClockFn clock, SleepFn sleep)
    : limits_(limits), clock_(std::move(clock)), sleep_(std::move(sleep)) {
  if (limits_.max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
  if (limits_.requests_per_minute < 0) throw ConfigError("requests_per_minute must be >= 0");
}

RateLimiter::Permit::~Permit() {
  if (owner_ != nullptr) owner_->release();
}

RateLimiter::Permit RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  slot_freed_.wait(lock, [&] { return active_ < limits_.max_concurrent; });
  ++active_;
  if (limits_.requests_per_minute > 0) {
    constexpr auto kWindow = std::chrono::minutes(1);
    for (;;) {
      const auto now = clock_();
      while (!window_.empty() && now - window_.front() >= kWindow) window_.pop_front();
      if (window_.size() < static_cast<std::size_t>(limits_.requests_per_minute)) {
        window_.push_back(now);
        break;
      }
      const auto wait =
          std::chrono::ceil<std::chrono::milliseconds>(window_.front() + kWindow - now);
      lock.unlock();
      sleep_(wait);
      lock.lock();
    }
  }
  return Permit(this);
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  slot_freed_.notify_one();
}

int RateLimiter::in_flight() const {
  std::lock_guard lock(mutex_);
  return active_;
}

// ---------------------------------------------------------------- response cache

ResponseCache::ResponseCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::optional<std::filesystem::path> ResponseCache::path_for(const std::string& digest) const {
  if (!dir_) return std::nullopt;
  return *dir_ / digest.substr(0, 2) / (digest + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& digest) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(digest); it != memory_.end()) return it->second;
  }
  const auto path = path_for(digest);
  if (!path || !std::filesystem::exists(*path)) return std::nullopt;
  try {
    json doc = json::parse(read_text(*path));
    if (doc.at("digest").get<std::string>() != digest) return std::nullopt;
    std::string text = doc.at("text").get<std::string>();
    std::lock_guard lock(mutex_);
    memory_.emplace(digest, text);
    return text;
  } catch (const std::exception&) {
    // unreadable entries count as misses and get overwritten
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& digest, const std::string& text, const std::string& backend_id) {
  {
    std::lock_guard lock(mutex_);
    memory_[digest] = text;
  }
  if (const auto path = path_for(digest)) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    json doc{{"digest", digest},
             {"text", text},
             {"backend_id", backend_id},
             {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
    write_text_atomic(*path, doc.dump(2));
  }
}

// ---------------------------------------------------------------- gateway

namespace {

SleepFn default_sleep() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ClockFn default_clock() {
  return [] { return std::chrono::steady_clock::now(); };
}

}  // namespace

Gateway::Gateway(std::shared_ptr<TextBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_([&] {
        if (!options.sleep) options.sleep = default_sleep();
        if (!options.clock) options.clock = default_clock();
        return std::move(options);
      }()),
      limiter_(options_.limits, options_.clock, options_.sleep) {
  if (!backend_) throw ConfigError("gateway requires a backend");
  options_.retry.validate();
  if (options_.cache_enabled) cache_ = std::make_unique<ResponseCache>(options_.cache_dir);
}

std::string Gateway::call_with_retry(const GenerationRequest& req) {
  for (int attempt = 1;; ++attempt) {
    const auto delay = options_.retry.delay_before_attempt(attempt);
    if (delay.count() > 0) options_.sleep(delay);
    try {
      auto permit = limiter_.acquire();
      {
        std::lock_guard lock(stats_mutex_);
        ++stats_.backend_calls;
      }
      std::string text = backend_->complete(req);
      if (is_blank(text)) {
        throw GatewayError(GatewayErrorKind::Malformed, "backend returned empty text");
      }
      return text;
    } catch (const GatewayError& err) {
      if (!err.retryable() || attempt >= options_.retry.max_attempts) {
        std::lock_guard lock(stats_mutex_);
        ++stats_.failures;
        throw;
      }
      std::lock_guard lock(stats_mutex_);
      ++stats_.retries;
    }
  }
}

GenerationResponse Gateway::generate(const GenerationRequest& req) {
  req.validate();
  if (!cache_) return {call_with_retry(req), backend_->id(), false};

  const std::string key = cache_key(req);
  if (auto hit = cache_->get(key)) {
    std::lock_guard lock(stats_mutex_);
    ++stats_.cache_hits;
    return {*hit, backend_->id(), true};
  }

  std::promise<std::string> promise;
  std::shared_future<std::string> pending;
  bool owner = false;
  {
    std::lock_guard lock(inflight_mutex_);
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      pending = it->second;
    } else {
      // re-check: another thread may have finished between the cache probe and here
      if (auto hit = cache_->get(key)) {
        std::lock_guard stats_lock(stats_mutex_);
        ++stats_.cache_hits;
        return {*hit, backend_->id(), true};
      }
      pending = promise.get_future().share();
      inflight_.emplace(key, pending);
      owner = true;
    }
  }

  if (!owner) {
    std::string text = pending.get();
    std::lock_guard lock(stats_mutex_);
    ++stats_.cache_hits;
    return {std::move(text), backend_->id(), true};
  }

  try {
    std::string text = call_with_retry(req);
    cache_->put(key, text, backend_->id());
    promise.set_value(text);
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    return {std::move(text), backend_->id(), false};
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    throw;
  }
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

// ---------------------------------------------------------------- remote backend

RemoteChatBackend::RemoteChatBackend(RemoteChatOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ConfigError("remote backend requires an endpoint URL");
  detail::parse_url(options_.endpoint);
}

std::string RemoteChatBackend::id() const { return "remote:" + options_.model; }

std::string RemoteChatBackend::complete(const GenerationRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", m.kind == SpeakerKind::System ? "system" : "user"}, {"content", m.text}});
  }
  json body{{"model", options_.model},
            {"messages", std::move(messages)},
            {"temperature", req.settings.temperature},
            {"max_tokens", req.settings.max_tokens},
            {"seed", req.settings.seed}};
  const auto reply = detail::post_json(options_.endpoint, options_.api_key, body.dump(), options_.timeout);
  detail::raise_for_status(reply);
  try {
    json doc = json::parse(reply.body);
    std::string text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (is_blank(text)) throw GatewayError(GatewayErrorKind::Malformed, "completion content is empty");
    return text;
  } catch (const json::exception& e) {
    throw GatewayError(GatewayErrorKind::Malformed, fmt::format("unparseable completion response: {}", e.what()));
  }
}

}  // namespace veridebate
