#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "bioguard/guard.hpp"
#include "bioguard/model_gateway.hpp"
#include "bioguard/sanitizer.hpp"

namespace bioguard {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Whole-run configuration: one JSON file, CLI flags override, and the
// effective value is embedded in every report for provenance.
struct AppConfig {
    uint64_t seed = 42;
    int jobs = 0;  // 0 = all cores
    std::string lexicon_dir = "data/lexicon";
    std::string blast_db;  // optional FASTA path

    BlastThresholds blast;
    GuardConfig pre_guard = GuardConfig::pre_default();
    GuardConfig post_guard = GuardConfig::post_default();

    std::string persona = "mock-base";  // mock-base | mock-aligned | http | replay
    std::optional<double> compliance_rate;  // overrides the persona default
    Tier intent_tier = Tier::L3_all;
    HttpModelConfig http;
    std::string replay_transcript;

    std::vector<std::string> sanitize_fields = kDefaultScanFields;

    static AppConfig from_json(const nlohmann::json& j);
    static AppConfig load_file(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;
};

GuardResources build_resources(const AppConfig& config);
std::unique_ptr<ModelGateway> build_gateway(const AppConfig& config,
                                            const TieredLexicon& lexicon);

}  // namespace bioguard
