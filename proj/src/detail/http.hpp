#pragma once

#include <chrono>
#include <string>

namespace veridebate::detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url);

struct HttpReply {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body with an optional bearer token. Connection failures raise
/// GatewayError(Transport); status codes are mapped by raise_for_status.
HttpReply post_json(const std::string& url, const std::string& bearer_token, const std::string& body,
                    std::chrono::seconds timeout);

void raise_for_status(const HttpReply& reply);

}  // namespace veridebate::detail
