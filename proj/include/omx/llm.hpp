#pragma once

#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace omx {

enum class LlmMode { Remote, Mock };

std::string_view to_string(LlmMode mode);
LlmMode parse_llm_mode(std::string_view text);

struct LlmEndpointConfig {
    std::string base_url;            // full URL of the chat-completions endpoint
    std::string model_name = "gpt-4o";
    int timeout_seconds = 120;
    std::string api_key_env = "OMX_LLM_API_KEY";
    LlmMode mode = LlmMode::Mock;

    void validate() const; // remote mode requires base_url
};

struct HttpRequest {
    std::string url;
    std::string body;
    std::map<std::string, std::string> headers;
    int timeout_seconds = 120;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    // Throws Timeout or ConnectionError.
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

class HttplibTransport : public HttpTransport {
public:
    HttpResponse post(const HttpRequest& request) override;
};

// Deterministic stand-in for a model: fills the report template from the
// prompt text alone and cites only values printed in the metrics component.
std::string mock_complete(std::string_view prompt_text);

// Remote mode posts {model, messages:[{role:user, content}]} and returns
// choices[0].message.content. Throws Timeout, ConnectionError, HttpStatus or
// MalformedResponse. Mock mode never touches the transport.
std::string complete(const LlmEndpointConfig& cfg, std::string_view prompt_text, HttpTransport* transport = nullptr);

void to_json(nlohmann::json& j, const LlmEndpointConfig& c);
void from_json(const nlohmann::json& j, LlmEndpointConfig& c);

} // namespace omx
