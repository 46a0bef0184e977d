#include "bioguard/model_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bioguard/normalize.hpp"
#include "bioguard/util.hpp"

namespace bioguard {

bool contains_payload_sentinel(std::string_view text) {
    return text.find(kPayloadSentinel) != std::string_view::npos;
}

MockModel::MockModel(MockModelConfig config, const TieredLexicon* lexicon)
    : config_(std::move(config)), lexicon_(lexicon) {
    if (lexicon_ == nullptr) throw GatewayError("mock model requires a lexicon");
    persona_ = config_.compliance_rate <= 0.1 ? "mock-aligned" : "mock-base";
}

bool MockModel::harmful_intent(const std::string& prompt) const {
    const std::string folded = normalize(prompt).folded;
    for (const auto& term : lexicon_->effective(config_.intent_tier)) {
        if (folded.find(term) != std::string::npos) return true;
    }
    return false;
}

GenerateResult MockModel::generate(const std::string& prompt) {
    ++call_count_;
    if (!harmful_intent(prompt)) {
        return {true, config_.helpful_template, {}};
    }
    const std::string folded = normalize(prompt).folded;
    const double u = unit_double(mix_hash(config_.seed, fnv1a64(folded)));
    if (u < config_.compliance_rate) {
        std::string payload = config_.payload_template;
        const auto at = payload.find("{sequence}");
        if (at != std::string::npos) {
            payload.replace(at, std::string("{sequence}").size(), kPayloadMarkerSequence);
        }
        return {true, payload, {}};
    }
    return {true, config_.refusal_template, {}};
}

HttpModel::HttpModel(HttpModelConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw GatewayError("http persona requires a base_url");
    }
    if (!config_.auth_env.empty()) {
        const char* tok = std::getenv(config_.auth_env.c_str());
        if (tok == nullptr || *tok == '\0') {
            throw GatewayError("auth token env var '" + config_.auth_env + "' is not set");
        }
        token_ = tok;
    }
}

GenerateResult HttpModel::generate(const std::string& prompt) {
    nlohmann::json body{
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", config_.temperature},
    };
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_ms * (1 << (attempt - 1))));
        }
        ++call_count_;
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        auto res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            return {false, {}, "HTTP " + std::to_string(res->status) + ": " + res->body};
        }
        try {
            const auto json = nlohmann::json::parse(res->body);
            return {true, json.at("choices").at(0).at("message").at("content").get<std::string>(),
                    {}};
        } catch (const nlohmann::json::exception& e) {
            return {false, {}, std::string("malformed completion response: ") + e.what()};
        }
    }
    return {false, {}, last_error + " (after " + std::to_string(config_.retries + 1) + " attempts)"};
}

std::string ReplayModel::prompt_key(const std::string& prompt) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(normalize(prompt).folded)));
    return buf;
}

ReplayModel::ReplayModel(const std::filesystem::path& transcript) {
    std::ifstream in(transcript);
    if (!in) throw GatewayError("cannot open transcript: " + transcript.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError("transcript " + transcript.string() + " line " +
                               std::to_string(line_no) + ": " + e.what());
        }
        const std::string key = row.at("prompt_hash").get<std::string>();
        if (!transcript_.emplace(key, row.at("completion").get<std::string>()).second) {
            throw GatewayError("duplicate prompt_hash '" + key + "' in transcript " +
                               transcript.string());
        }
    }
}

GenerateResult ReplayModel::generate(const std::string& prompt) {
    ++call_count_;
    const std::string key = prompt_key(prompt);
    const auto it = transcript_.find(key);
    if (it == transcript_.end()) {
        return {false, {}, "transcript miss for prompt_hash " + key};
    }
    return {true, it->second, {}};
}

}  // namespace bioguard
