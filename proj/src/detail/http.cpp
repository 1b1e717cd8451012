#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "detail/http.hpp"

#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "veridebate/errors.hpp"
#include "veridebate/llm_gateway.hpp"

namespace veridebate::detail {

ParsedUrl parse_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?)://([^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw ConfigError(fmt::format("malformed endpoint URL '{}'", url));
  }
  ParsedUrl out;
  out.origin = m[1].str() + "://" + m[2].str();
  out.path = m[3].matched ? m[3].str() : "/";
  return out;
}

HttpReply post_json(const std::string& url, const std::string& bearer_token, const std::string& body,
                    std::chrono::seconds timeout) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  auto res = client.Post(parsed.path, headers, body, "application/json");
  if (!res) {
    throw GatewayError(GatewayErrorKind::Transport,
                       fmt::format("POST {} failed: {}", url, httplib::to_string(res.error())));
  }
  return {res->status, res->body};
}

void raise_for_status(const HttpReply& reply) {
  if (reply.status >= 200 && reply.status < 300) return;
  const std::string snippet = reply.body.substr(0, 200);
  if (reply.status == 429) {
    throw GatewayError(GatewayErrorKind::RateLimited, fmt::format("rate limited (429): {}", snippet));
  }
  if (reply.status >= 500) {
    throw GatewayError(GatewayErrorKind::Transport, fmt::format("server error {}: {}", reply.status, snippet));
  }
  throw GatewayError(GatewayErrorKind::Rejected, fmt::format("request rejected {}: {}", reply.status, snippet));
}

}  // namespace veridebate::detail
