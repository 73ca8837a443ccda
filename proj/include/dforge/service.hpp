#pragma once

// HTTP steering service. Handlers are plain functions from request body to
// (status, JSON body) so they can be exercised without a socket; mount()
// wires them into an httplib::Server.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "httplib.h"
#include "json.hpp"

#include "dforge/error.hpp"
#include "dforge/labels.hpp"
#include "dforge/lexicon.hpp"
#include "dforge/metrics.hpp"
#include "dforge/rbda.hpp"
#include "dforge/record.hpp"

namespace dforge {

inline constexpr const char* kDefaultHost = "127.0.0.1";
inline constexpr int kDefaultPort = 8077;

/// Everything the service reads. Immutable once the server starts.
struct ServiceState {
  Lexicon lexicon;
  std::optional<CorpusStats> corpus_stats;
  TagMode tag_mode = TagMode::TwoTag;
  std::string cors_origin = "*";
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

namespace detail {

inline ApiResponse json_response(int status, const nlohmann::ordered_json& j) {
  return {status, j.dump(), "application/json"};
}

inline ApiResponse error_response(int status, const std::string& error,
                                  const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = error;
  j["message"] = message;
  return json_response(status, j);
}

inline ApiResponse unknown_label_response(const UnknownLabel& e) {
  nlohmann::ordered_json j;
  j["error"] = "UnknownLabel";
  j["message"] = e.what();
  j["token"] = e.token();
  j["kind"] = e.kind();
  return json_response(400, j);
}

}  // namespace detail

inline nlohmann::ordered_json steer_json(std::string_view text, const ControlVector& cv,
                                         const ServiceState& state) {
  const auto res = dialectalize(text, cv, state.lexicon);
  nlohmann::ordered_json j;
  j["output"] = res.output;
  auto& subs = j["substitutions"] = nlohmann::ordered_json::array();
  for (const auto& s : res.substitutions) subs.push_back(to_json(s));
  j["authenticity"] = authenticity_score(res.output, cv.region, state.lexicon);
  j["tagged_form"] = format_control_prefix(cv, text, state.tag_mode);
  j["control"] = {{"region", to_string(cv.region)},
                  {"context", to_string(cv.context)},
                  {"register", to_string(cv.register_)}};
  return j;
}

/// POST /steer {"text", "region", "context"?, "register"?}. Context and
/// register default to General and Formal.
inline ApiResponse handle_steer(const ServiceState& state, std::string_view body) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return detail::error_response(400, "MalformedBody", e.what());
  }
  if (!req.is_object()) return detail::error_response(400, "MalformedBody", "expected an object");

  auto string_field = [&](const char* key) -> std::optional<std::string> {
    const auto it = req.find(key);
    if (it == req.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw PreconditionError(std::string("\"") + key + "\" must be a string");
    return it->get<std::string>();
  };

  try {
    const auto text = string_field("text");
    if (!text) return detail::error_response(400, "MalformedBody", "\"text\" is required");
    const auto region = string_field("region");
    if (!region) return detail::error_response(400, "MalformedBody", "\"region\" is required");
    ControlVector cv;
    cv.region = parse_region(*region);
    if (const auto c = string_field("context")) cv.context = parse_context(*c);
    if (const auto r = string_field("register")) cv.register_ = parse_register(*r);
    if (trim(*text).empty()) return detail::error_response(422, "EmptyText", "\"text\" is empty");
    return detail::json_response(200, steer_json(*text, cv, state));
  } catch (const UnknownLabel& e) {
    return detail::unknown_label_response(e);
  } catch (const PreconditionError& e) {
    return detail::error_response(400, "MalformedBody", e.what());
  }
}

/// POST /evaluate with a JSON array of {"hypothesis", "reference", "region"}
/// (or {"pairs": [...]}).
inline ApiResponse handle_evaluate(const ServiceState& state, std::string_view body) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return detail::error_response(400, "MalformedBody", e.what());
  }
  if (req.is_object() && req.contains("pairs")) req = req["pairs"];
  if (!req.is_array()) {
    return detail::error_response(400, "MalformedBody", "expected an array of evaluation pairs");
  }
  try {
    std::vector<EvalPair> pairs;
    for (const auto& item : req) pairs.push_back(eval_pair_from_json(item));
    return detail::json_response(200, to_json(per_region_report(pairs, state.lexicon)));
  } catch (const UnknownLabel& e) {
    return detail::unknown_label_response(e);
  } catch (const EmptyEvalSet& e) {
    return detail::error_response(400, "EmptyEvalSet", e.what());
  } catch (const PreconditionError& e) {
    return detail::error_response(400, "MalformedBody", e.what());
  }
}

inline ApiResponse handle_stats(const ServiceState& state) {
  if (!state.corpus_stats) {
    return detail::error_response(404, "NoCorpus", "no corpus was loaded at startup");
  }
  return detail::json_response(200, to_json(*state.corpus_stats));
}

inline ApiResponse handle_regions() {
  nlohmann::ordered_json j;
  auto& regions = j["regions"] = nlohmann::ordered_json::array();
  for (Region r : kAllRegions) regions.push_back(to_string(r));
  auto& contexts = j["contexts"] = nlohmann::ordered_json::array();
  for (Context c : kAllContexts) contexts.push_back(to_string(c));
  auto& registers = j["registers"] = nlohmann::ordered_json::array();
  for (Register r : kAllRegisters) registers.push_back(to_string(r));
  auto& aliases = j["aliases"] = nlohmann::ordered_json::object();
  for (const auto& [alias, canonical] : kLabelAliases) aliases[std::string(alias)] = canonical;
  return detail::json_response(200, j);
}

/// Registers every endpoint on `server`. `state` must outlive the server.
inline void mount(httplib::Server& server, const ServiceState& state) {
  auto send = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body, api.content_type + "; charset=utf-8");
  };

  server.set_default_headers({
      {"Access-Control-Allow-Origin", state.cors_origin},
      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
      {"Access-Control-Allow-Headers", "Content-Type"},
  });

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  server.Get("/regions", [send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_regions());
  });
  server.Get("/stats", [send, &state](const httplib::Request&, httplib::Response& res) {
    send(res, handle_stats(state));
  });
  server.Post("/steer", [send, &state](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_steer(state, req.body));
  });
  server.Post("/evaluate", [send, &state](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_evaluate(state, req.body));
  });
}

}  // namespace dforge
