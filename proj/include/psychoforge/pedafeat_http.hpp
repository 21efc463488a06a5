#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "psychoforge/pedafeat.hpp"

namespace psychoforge::pedafeat {

struct HttpProviderConfig {
  std::string endpoint;  // e.g. http://localhost:8080/v1/complete
  int timeout_seconds = 60;
};

// Posts {"model", "prompt", "temperature"} as JSON and reads the completion
// back from the first of several conventional response shapes. The API key is
// taken from the PSYCHOFORGE_API_KEY environment variable, never from config.
class HttpLlmProvider : public LlmProvider {
 public:
  explicit HttpLlmProvider(HttpProviderConfig config) : config_(std::move(config)) {
    std::size_t scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos)
      throw ValidationError("http provider endpoint must include a scheme: '" +
                            config_.endpoint + "'");
    std::size_t path_start = config_.endpoint.find('/', scheme + 3);
    if (path_start == std::string::npos) {
      base_ = config_.endpoint;
      path_ = "/";
    } else {
      base_ = config_.endpoint.substr(0, path_start);
      path_ = config_.endpoint.substr(path_start);
    }
    if (const char* key = std::getenv("PSYCHOFORGE_API_KEY")) api_key_ = key;
  }

  std::string complete(const std::string& prompt,
                       const GenerationSettings& settings) override {
    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty())
      headers.emplace("Authorization", "Bearer " + api_key_);

    nlohmann::json body;
    body["model"] = settings.model_tag;
    body["prompt"] = prompt;
    body["temperature"] = settings.temperature;

    httplib::Result res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res)
      throw ProviderError("http provider: request to " + base_ + path_ +
                          " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw ProviderError("http provider: status " + std::to_string(res->status) +
                          " from " + base_ + path_);

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded())
      return res->body;  // plain-text completion endpoints
    for (const char* key : {"text", "completion", "content"})
      if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const nlohmann::json& c = j["choices"][0];
      if (c.contains("text") && c["text"].is_string())
        return c["text"].get<std::string>();
      if (c.contains("message") && c["message"].contains("content") &&
          c["message"]["content"].is_string())
        return c["message"]["content"].get<std::string>();
    }
    throw ProviderError("http provider: response has no completion field");
  }

 private:
  HttpProviderConfig config_;
  std::string base_;
  std::string path_;
  std::string api_key_;
};

}  // namespace psychoforge::pedafeat
