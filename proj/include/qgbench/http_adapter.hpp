#pragma once

// Generation adapter for OpenAI-compatible HTTP endpoints, either the
// chat-completions shape (single user message) or the legacy completions
// shape (plain prompt).

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "qgbench/generation.hpp"

namespace qgbench::generation {

enum class WireStyle { Chat, Completions };

inline WireStyle wire_style_from_string(std::string_view s) {
  if (s == "chat") return WireStyle::Chat;
  if (s == "completions") return WireStyle::Completions;
  throw InvalidArgument("unknown endpoint style '" + std::string(s) + "'");
}

struct EndpointConfig {
  std::string base_url = "https://api.openai.com";
  std::string path;  // defaults per style when empty
  WireStyle style = WireStyle::Chat;
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{60};

  std::string effective_path() const {
    if (!path.empty()) return path;
    return style == WireStyle::Chat ? "/v1/chat/completions" : "/v1/completions";
  }
};

/// Request body for one generation. Unset penalties are omitted so the
/// server applies its own defaults.
inline nlohmann::ordered_json build_request_body(WireStyle style, const std::string& model,
                                                 const std::string& prompt,
                                                 const GenParams& params) {
  nlohmann::ordered_json body;
  body["model"] = model;
  if (style == WireStyle::Chat) {
    body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  body["max_tokens"] = params.max_tokens;
  body["temperature"] = params.temperature;
  if (params.presence_penalty) body["presence_penalty"] = *params.presence_penalty;
  if (params.frequency_penalty) body["frequency_penalty"] = *params.frequency_penalty;
  return body;
}

/// Extracts choices[0].message.content (chat) or choices[0].text.
inline std::string parse_completion(WireStyle style, const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedResponse(e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw MalformedResponse("no choices in response");
  }
  const auto& choice = j["choices"][0];
  const nlohmann::json* text = nullptr;
  if (style == WireStyle::Chat) {
    if (choice.contains("message") && choice["message"].contains("content")) {
      text = &choice["message"]["content"];
    }
  } else if (choice.contains("text")) {
    text = &choice["text"];
  }
  if (!text || !text->is_string()) throw MalformedResponse("choice carries no text");
  return text->get<std::string>();
}

class HttpAdapter : public GenerationAdapter {
 public:
  HttpAdapter(std::string model, EndpointConfig config)
      : model_(std::move(model)), config_(std::move(config)) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }

  std::string model_id() const override { return model_; }

  std::string complete(const RenderedInput& input, const GenParams& params) override {
    // One client per call: httplib::Client is not safe for concurrent use.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto body =
        build_request_body(config_.style, model_, promptkit::flatten(input), params).dump();
    auto res = client.Post(config_.effective_path(), headers, body, "application/json");
    if (!res) throw EndpointUnreachable(httplib::to_string(res.error()));
    if (res->status == 429) {
      std::chrono::milliseconds retry_after{0};
      if (res->has_header("Retry-After")) {
        try {
          retry_after = std::chrono::milliseconds(
              static_cast<long long>(std::stod(res->get_header_value("Retry-After")) * 1000));
        } catch (const std::exception&) {
        }
      }
      throw RateLimited(retry_after);
    }
    if (res->status >= 500) throw EndpointUnreachable("HTTP " + std::to_string(res->status));
    if (res->status < 200 || res->status >= 300) throw RequestRejected(res->status, res->body);
    return parse_completion(config_.style, res->body);
  }

 private:
  std::string model_;
  EndpointConfig config_;
  std::string api_key_;
};

}  // namespace qgbench::generation
