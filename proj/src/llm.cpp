#include "omx/llm.hpp"

#include "omx/diagnosis.hpp"
#include "omx/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>
#include <vector>

#include "httplib.h"

namespace omx {

std::string_view to_string(LlmMode mode) { return mode == LlmMode::Remote ? "remote" : "mock"; }

LlmMode parse_llm_mode(std::string_view text) {
    if (text == "remote") return LlmMode::Remote;
    if (text == "mock") return LlmMode::Mock;
    throw Error(ErrorCode::InvalidArgument, "llm mode must be remote or mock, got '" + std::string(text) + "'");
}

void LlmEndpointConfig::validate() const {
    if (mode == LlmMode::Remote && base_url.empty()) {
        throw Error(ErrorCode::InvalidArgument, "remote llm mode requires a base url");
    }
    if (timeout_seconds <= 0) throw Error(ErrorCode::InvalidArgument, "llm timeout must be > 0");
}

HttpResponse HttplibTransport::post(const HttpRequest& request) {
    static const std::regex url_re(R"(^(https?)://([^/:]+)(?::([0-9]+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(request.url, m, url_re)) {
        throw Error(ErrorCode::ConnectionError, "unsupported url '" + request.url + "'");
    }
    const std::string scheme_host = m[1].str() + "://" + m[2].str() + (m[3].matched ? ":" + m[3].str() : "");
    const std::string path = m[4].matched ? m[4].str() : "/";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (m[1].str() == "https") throw Error(ErrorCode::ConnectionError, "built without TLS support");
#endif
    httplib::Client client(scheme_host);
    client.set_connection_timeout(request.timeout_seconds, 0);
    client.set_read_timeout(request.timeout_seconds, 0);
    client.set_write_timeout(request.timeout_seconds, 0);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto res = client.Post(path, headers, request.body, "application/json");
    if (!res) {
        const auto err = res.error();
        const auto what = httplib::to_string(err);
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
            throw Error(ErrorCode::Timeout, what);
        }
        throw Error(ErrorCode::ConnectionError, what);
    }
    return {res->status, res->body};
}

namespace {

std::vector<std::string> section_lines(std::string_view prompt, std::string_view head) {
    std::vector<std::string> out;
    std::istringstream in{std::string(prompt)};
    std::string line;
    bool inside = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '[' && line.back() == ']') {
            inside = line == head;
            continue;
        }
        if (inside) out.push_back(line);
    }
    return out;
}

std::string normalize(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

} // namespace

std::string mock_complete(std::string_view prompt_text) {
    static const std::regex metric_re(R"(^- metric ([^ :]+) \(([^)]*)\).*\bmax=([^,;]+),.*\bavg=([^,;]+),)");
    static const std::regex cause_re(R"(Possible cause:\s*([^.;]+))", std::regex::icase);
    static const std::regex action_re(R"(Recommended action:\s*([^;]+?)\s*\.?\s*$)", std::regex::icase);
    static const std::regex anomaly_re(R"(^Anomaly (\S+))");

    std::string model = "UNKNOWN";
    for (const auto& line : section_lines(prompt_text, kPromptAnomaly)) {
        std::smatch m;
        if (std::regex_search(line, m, anomaly_re)) {
            model = m[1].str();
            break;
        }
    }

    std::vector<std::pair<std::string, std::string>> cited; // (metric, "max=..., avg=...")
    bool in_abnormal = false;
    for (const auto& line : section_lines(prompt_text, kPromptMetrics)) {
        if (line.rfind("Abnormal metrics", 0) == 0) {
            in_abnormal = true;
            continue;
        }
        if (line.rfind("Normal metrics", 0) == 0) {
            in_abnormal = false;
            continue;
        }
        std::smatch m;
        if (in_abnormal && std::regex_search(line, m, metric_re)) {
            cited.emplace_back(m[1].str(), "max=" + m[3].str() + ", avg=" + m[4].str());
        }
    }

    std::vector<std::string> causes;
    std::set<std::string> seen;
    std::vector<std::string> actions;
    for (const auto& line : section_lines(prompt_text, kPromptExperience)) {
        for (auto it = std::sregex_iterator(line.begin(), line.end(), cause_re); it != std::sregex_iterator(); ++it) {
            std::string label = (*it)[1].str();
            while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
            if (!label.empty() && causes.size() < 5 && seen.insert(normalize(label)).second) causes.push_back(label);
        }
        std::smatch m;
        if (std::regex_search(line, m, action_re)) actions.push_back(m[1].str());
    }
    if (causes.empty()) causes.push_back("UNDETERMINED");
    if (actions.empty()) actions.push_back("Review the configuration and workload associated with each listed cause.");

    std::ostringstream o;
    o << "# " << kSectionValidation << "\n";
    o << "Real anomaly: " << (cited.empty() ? "no" : "yes") << "\n";
    if (cited.empty()) {
        o << "No screened metric deviates from its baseline; the alert may be transient.\n";
    } else {
        o << cited.size() << " metric(s) deviate from their dynamic baseline in the detection window.\n";
    }
    o << "\n# " << kSectionRootCause << "\n";
    for (std::size_t i = 0; i < causes.size(); ++i) {
        o << "## " << (i + 1) << ". " << causes[i] << "\n";
        o << "Reached through the experience graph for " << model << ".\n";
        for (const auto& [id, stats] : cited) o << "Evidence: metric " << id << " " << stats << "\n";
    }
    o << "\n# " << kSectionRecovery << "\n";
    for (const auto& a : actions) o << "- " << a << "\n";
    o << "\n# " << kSectionSummary << "\n";
    o << model << ": " << cited.size() << " abnormal metric(s); leading cause " << causes.front() << ".\n";
    o << "\n# " << kSectionSql << "\nnone\n";
    return o.str();
}

std::string complete(const LlmEndpointConfig& cfg, std::string_view prompt_text, HttpTransport* transport) {
    if (prompt_text.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
    cfg.validate();
    if (cfg.mode == LlmMode::Mock) return mock_complete(prompt_text);

    HttplibTransport fallback;
    HttpTransport& http = transport ? *transport : fallback;
    HttpRequest req;
    req.url = cfg.base_url;
    req.timeout_seconds = cfg.timeout_seconds;
    req.headers["Content-Type"] = "application/json";
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
            req.headers["Authorization"] = std::string("Bearer ") + key;
        }
    }
    req.body = nlohmann::json{{"model", cfg.model_name},
                              {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}})}}
                   .dump();
    const auto res = http.post(req);
    if (res.status < 200 || res.status >= 300) throw HttpStatusError(res.status);
    try {
        const auto doc = nlohmann::json::parse(res.body);
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string() || content.get<std::string>().empty()) {
            throw Error(ErrorCode::MalformedResponse, "message content missing");
        }
        return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, e.what());
    }
}

void to_json(nlohmann::json& j, const LlmEndpointConfig& c) {
    j = {{"base_url", c.base_url},
         {"model_name", c.model_name},
         {"timeout_seconds", c.timeout_seconds},
         {"api_key_env", c.api_key_env},
         {"mode", std::string(to_string(c.mode))}};
}

void from_json(const nlohmann::json& j, LlmEndpointConfig& c) {
    LlmEndpointConfig d;
    c.base_url = j.value("base_url", d.base_url);
    c.model_name = j.value("model_name", d.model_name);
    c.timeout_seconds = j.value("timeout_seconds", d.timeout_seconds);
    c.api_key_env = j.value("api_key_env", d.api_key_env);
    c.mode = parse_llm_mode(j.value("mode", std::string("mock")));
    c.validate();
}

} // namespace omx
