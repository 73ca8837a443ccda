#pragma once

// Optional remote auditor: POSTs the audit prompt as plain text and parses
// the plain-text completion. Configured by AUDIT_URL / AUDIT_KEY; disabled
// when AUDIT_URL is unset.

#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "httplib.h"

#include "dforge/error.hpp"
#include "dforge/labels.hpp"
#include "dforge/metrics.hpp"

namespace dforge {

class AuditClient {
 public:
  /// `url` is scheme://host[:port]/path. Only http is supported.
  AuditClient(std::string url, std::string key) : key_(std::move(key)) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
      throw PreconditionError("AUDIT_URL must be an http:// URL: " + url);
    }
    const auto path_begin = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  }

  static std::optional<AuditClient> from_env() {
    const char* url = std::getenv("AUDIT_URL");
    if (url == nullptr || *url == '\0') return std::nullopt;
    const char* key = std::getenv("AUDIT_KEY");
    return AuditClient(url, key ? key : "");
  }

  /// Raw completion text for a prompt.
  std::string complete(const std::string& prompt) const {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(120);
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
    auto res = cli.Post(path_, headers, prompt, "text/plain; charset=utf-8");
    if (!res) {
      throw ForgeError("audit request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ForgeError("audit endpoint returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

  int score(std::string_view text, Region target) const {
    return parse_audit_response(complete(audit_prompt(text, target)));
  }

  const std::string& origin() const noexcept { return origin_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string origin_;
  std::string path_;
  std::string key_;
};

}  // namespace dforge
