#pragma once

// LLM annotation of prompts. Two backends: a live chat-completion HTTP
// endpoint and a stub corpus of canned replies keyed by prompt digest.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apkvis/digest.hpp"
#include "apkvis/error.hpp"
#include "apkvis/text_features.hpp"

namespace apkvis {

enum class AnnotatorMode { None, Stub, Live };
enum class Provenance { LiveEndpoint, Stub };

constexpr std::string_view to_string(Provenance p) noexcept
{
    return p == Provenance::Stub ? "stub" : "live";
}

struct Annotation {
    std::string text;
    Label label_hypothesis = Label::Benign;
    Provenance provenance = Provenance::Stub;
    std::string model_id;
};

struct AnnotatorConfig {
    AnnotatorMode mode = AnnotatorMode::None;
    std::string endpoint; // full URL of the chat-completions route
    std::string model_id;
    std::string api_key;
    std::filesystem::path stub_dir;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds request_timeout{60};
    int max_in_flight = 4;
    // Sampling parameters are passed through untouched when set.
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> max_new_tokens;

    /// Reads ANNOTATOR_MODE, ANNOTATOR_ENDPOINT, ANNOTATOR_MODEL and
    /// ANNOTATOR_API_KEY. Live mode without an endpoint is a ConfigError.
    static AnnotatorConfig from_env()
    {
        auto env = [](const char* name) -> std::string {
            const char* v = std::getenv(name);
            return v == nullptr ? std::string{} : std::string(v);
        };
        AnnotatorConfig cfg;
        const std::string mode = env("ANNOTATOR_MODE");
        if (mode.empty() || mode == "none") {
            cfg.mode = AnnotatorMode::None;
        } else if (mode == "stub") {
            cfg.mode = AnnotatorMode::Stub;
        } else if (mode == "live") {
            cfg.mode = AnnotatorMode::Live;
        } else {
            throw Error(ErrorCode::ConfigError, "ANNOTATOR_MODE must be live, stub or none, got '" + mode + "'");
        }
        cfg.endpoint = env("ANNOTATOR_ENDPOINT");
        cfg.model_id = env("ANNOTATOR_MODEL");
        cfg.api_key = env("ANNOTATOR_API_KEY");
        return cfg;
    }

    void validate() const
    {
        if (mode == AnnotatorMode::Live && endpoint.empty()) {
            throw Error(ErrorCode::ConfigError, "live annotation requires ANNOTATOR_ENDPOINT");
        }
        if (mode == AnnotatorMode::Stub && stub_dir.empty()) {
            throw Error(ErrorCode::ConfigError, "stub annotation requires a stub corpus directory");
        }
        if (max_attempts < 1 || max_in_flight < 1) {
            throw Error(ErrorCode::ConfigError, "max_attempts and max_in_flight must be >= 1");
        }
    }
};

struct HttpResult {
    bool transport_ok = false; // false: connection/timeout failure
    int status = 0;
    std::string body;
    std::string error;
};

using HttpPost = std::function<HttpResult(const std::string& url, const std::string& body,
                                          const std::string& api_key, std::chrono::seconds timeout)>;

namespace detail {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

inline SplitUrl split_url(const std::string& url)
{
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "endpoint is not an absolute URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline HttpResult httplib_post(const std::string& url, const std::string& body, const std::string& api_key,
                               std::chrono::seconds timeout)
{
    const SplitUrl parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key);
    }
    HttpResult result;
    auto res = client.Post(parts.path, headers, body, "application/json");
    if (!res) {
        result.error = httplib::to_string(res.error());
        return result;
    }
    result.transport_ok = true;
    result.status = res->status;
    result.body = res->body;
    return result;
}

/// Collapses every whitespace run that contains a line break into one
/// space, and trims.
inline std::string single_paragraph(std::string_view text)
{
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            std::size_t j = i;
            bool newline = false;
            while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) {
                newline = newline || text[j] == '\n' || text[j] == '\r';
                ++j;
            }
            if (!out.empty() && j < text.size()) {
                if (newline) {
                    out += ' ';
                } else {
                    out.append(text.substr(i, j - i));
                }
            }
            i = j;
            continue;
        }
        out += c;
        ++i;
    }
    return out;
}

} // namespace detail

/// Thread-safe; at most `max_in_flight` live requests run concurrently.
class Annotator {
public:
    explicit Annotator(AnnotatorConfig config, HttpPost post = detail::httplib_post)
        : config_(std::move(config)), post_(std::move(post)), in_flight_(config_.max_in_flight)
    {
        config_.validate();
    }

    const AnnotatorConfig& config() const noexcept { return config_; }
    bool enabled() const noexcept { return config_.mode != AnnotatorMode::None; }

    /// Key under which the stub corpus stores the reply to `prompt`.
    static std::string prompt_digest(const PromptInstance& prompt) { return sha256_hex(prompt.text()); }

    nlohmann::json request_body(const PromptInstance& prompt) const
    {
        nlohmann::json body;
        body["model"] = config_.model_id;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt.text()}}});
        if (config_.temperature) body["temperature"] = *config_.temperature;
        if (config_.top_p) body["top_p"] = *config_.top_p;
        if (config_.max_new_tokens) body["max_tokens"] = *config_.max_new_tokens;
        return body;
    }

    Annotation annotate(const PromptInstance& prompt)
    {
        switch (config_.mode) {
        case AnnotatorMode::Stub:
            return annotate_stub(prompt);
        case AnnotatorMode::Live:
            return annotate_live(prompt);
        case AnnotatorMode::None:
            break;
        }
        throw Error(ErrorCode::ConfigError, "no annotator configured");
    }

private:
    Annotation annotate_stub(const PromptInstance& prompt) const
    {
        const auto path = config_.stub_dir / (prompt_digest(prompt) + ".txt");
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec)) {
            throw Error(ErrorCode::StubMiss, path.string());
        }
        Annotation a;
        a.text = detail::single_paragraph(detail::read_text_file(path));
        if (a.text.empty()) {
            throw Error(ErrorCode::MalformedResponse, "empty stub reply " + path.string());
        }
        a.label_hypothesis = prompt.label_hypothesis;
        a.provenance = Provenance::Stub;
        a.model_id = config_.model_id.empty() ? "stub" : config_.model_id;
        return a;
    }

    Annotation annotate_live(const PromptInstance& prompt)
    {
        const std::string body = request_body(prompt).dump();
        std::string last_error;
        auto backoff = config_.initial_backoff;
        for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            HttpResult res;
            {
                in_flight_.acquire();
                struct Release {
                    std::counting_semaphore<>& s;
                    ~Release() { s.release(); }
                } release{in_flight_};
                res = post_(config_.endpoint, body, config_.api_key, config_.request_timeout);
            }
            if (!res.transport_ok) {
                last_error = "transport error: " + res.error;
                continue;
            }
            if (res.status == 429 || res.status >= 500) {
                last_error = "HTTP " + std::to_string(res.status);
                continue;
            }
            if (res.status < 200 || res.status >= 300) {
                throw Error(ErrorCode::EndpointUnreachable, "HTTP " + std::to_string(res.status));
            }
            return parse_reply(res.body, prompt);
        }
        throw Error(ErrorCode::EndpointUnreachable, "giving up after " + std::to_string(config_.max_attempts) +
                                                        " attempts: " + last_error);
    }

    Annotation parse_reply(const std::string& body, const PromptInstance& prompt) const
    {
        const auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::MalformedResponse, "response is not a JSON object");
        }
        const auto choices = j.find("choices");
        if (choices == j.end() || !choices->is_array() || choices->empty()) {
            throw Error(ErrorCode::MalformedResponse, "response has no choices");
        }
        const auto& first = (*choices)[0];
        std::string content;
        if (first.contains("message") && first["message"].is_object() && first["message"].contains("content") &&
            first["message"]["content"].is_string()) {
            content = first["message"]["content"].get<std::string>();
        } else if (first.contains("text") && first["text"].is_string()) {
            content = first["text"].get<std::string>();
        } else {
            throw Error(ErrorCode::MalformedResponse, "choice has no message content");
        }
        Annotation a;
        a.text = detail::single_paragraph(content);
        if (a.text.empty()) {
            throw Error(ErrorCode::MalformedResponse, "empty completion");
        }
        a.label_hypothesis = prompt.label_hypothesis;
        a.provenance = Provenance::LiveEndpoint;
        a.model_id = j.contains("model") && j["model"].is_string() ? j["model"].get<std::string>() : config_.model_id;
        return a;
    }

    AnnotatorConfig config_;
    HttpPost post_;
    std::counting_semaphore<> in_flight_;
};

} // namespace apkvis
