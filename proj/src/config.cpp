#include "bioguard/config.hpp"

#include <fstream>

#include "bioguard/util.hpp"

namespace bioguard {

namespace {

nlohmann::ordered_json guard_to_json(const GuardConfig& g) {
    auto enabled = nlohmann::ordered_json::array();
    for (SignalKind k : {SignalKind::keyword, SignalKind::fuzzy, SignalKind::semantic,
                         SignalKind::longseq, SignalKind::blast}) {
        if (g.signals.enabled.count(k)) enabled.push_back(signal_name(k));
    }
    return {
        {"mode", guard_mode_name(g.mode)},
        {"tier", tier_name(g.signals.tier)},
        {"fuzzy_threshold", g.signals.fuzzy_threshold},
        {"semantic_threshold", g.signals.semantic_threshold},
        {"longseq_min_len", g.signals.longseq_min_len},
        {"blast_enabled", g.blast_enabled},
        {"enabled", enabled},
    };
}

GuardConfig guard_from_json(const nlohmann::json& j, GuardConfig base) {
    if (j.contains("mode")) base.mode = guard_mode_from_name(j.at("mode").get<std::string>());
    if (j.contains("tier")) base.signals.tier = tier_from_name(j.at("tier").get<std::string>());
    if (j.contains("fuzzy_threshold")) base.signals.fuzzy_threshold = j.at("fuzzy_threshold");
    if (j.contains("semantic_threshold"))
        base.signals.semantic_threshold = j.at("semantic_threshold");
    if (j.contains("longseq_min_len")) base.signals.longseq_min_len = j.at("longseq_min_len");
    if (j.contains("blast_enabled")) base.blast_enabled = j.at("blast_enabled");
    if (j.contains("enabled")) {
        base.signals.enabled.clear();
        for (const auto& name : j.at("enabled")) {
            base.signals.enabled.insert(signal_from_name(name.get<std::string>()));
        }
    }
    if (base.blast_enabled) base.signals.enabled.insert(SignalKind::blast);
    return base;
}

}  // namespace

AppConfig AppConfig::from_json(const nlohmann::json& j) {
    AppConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
        c.lexicon_dir = j.value("lexicon_dir", c.lexicon_dir);
        c.blast_db = j.value("blast_db", c.blast_db);
        if (j.contains("blast")) {
            const auto& b = j.at("blast");
            c.blast.identity = b.value("identity", c.blast.identity);
            c.blast.min_len = b.value("min_len", c.blast.min_len);
            c.blast.seed_len = b.value("seed_len", c.blast.seed_len);
            c.blast.use_seed_prefilter =
                b.value("use_seed_prefilter", c.blast.use_seed_prefilter);
        }
        // Flat aliases for the two screening gates.
        c.blast.identity = j.value("blast_identity", c.blast.identity);
        c.blast.min_len = j.value("blast_min_len", c.blast.min_len);
        if (j.contains("pre_guard")) {
            c.pre_guard = guard_from_json(j.at("pre_guard"), GuardConfig::pre_default());
        }
        if (j.contains("post_guard")) {
            c.post_guard = guard_from_json(j.at("post_guard"), GuardConfig::post_default());
        }
        c.persona = j.value("persona", c.persona);
        if (j.contains("compliance_rate")) c.compliance_rate = j.at("compliance_rate");
        if (j.contains("intent_tier")) {
            c.intent_tier = tier_from_name(j.at("intent_tier").get<std::string>());
        }
        if (j.contains("http")) {
            const auto& h = j.at("http");
            c.http.base_url = h.value("base_url", c.http.base_url);
            c.http.path = h.value("path", c.http.path);
            c.http.model = h.value("model", c.http.model);
            c.http.auth_env = h.value("auth_env", c.http.auth_env);
            c.http.timeout_ms = h.value("timeout_ms", c.http.timeout_ms);
            c.http.retries = h.value("retries", c.http.retries);
            c.http.backoff_ms = h.value("backoff_ms", c.http.backoff_ms);
            c.http.temperature = h.value("temperature", c.http.temperature);
        }
        c.replay_transcript = j.value("replay_transcript", c.replay_transcript);
        if (j.contains("sanitize_fields")) {
            c.sanitize_fields = j.at("sanitize_fields").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

AppConfig AppConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::ordered_json AppConfig::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["lexicon_dir"] = lexicon_dir;
    j["blast_db"] = blast_db;
    j["blast"] = {{"identity", blast.identity},
                  {"min_len", blast.min_len},
                  {"seed_len", blast.seed_len},
                  {"use_seed_prefilter", blast.use_seed_prefilter}};
    j["pre_guard"] = guard_to_json(pre_guard);
    j["post_guard"] = guard_to_json(post_guard);
    j["persona"] = persona;
    if (compliance_rate) j["compliance_rate"] = *compliance_rate;
    j["intent_tier"] = tier_name(intent_tier);
    j["http"] = {{"base_url", http.base_url},   {"path", http.path},
                 {"model", http.model},         {"auth_env", http.auth_env},
                 {"timeout_ms", http.timeout_ms}, {"retries", http.retries},
                 {"backoff_ms", http.backoff_ms}, {"temperature", http.temperature}};
    j["replay_transcript"] = replay_transcript;
    j["sanitize_fields"] = sanitize_fields;
    return j;
}

GuardResources build_resources(const AppConfig& config) {
    TieredLexicon lexicon = load_lexicon_dir(config.lexicon_dir);
    std::optional<FastaDb> db;
    if (!config.blast_db.empty()) db = parse_fasta(config.blast_db);
    return GuardResources(std::move(lexicon), default_embedder(), std::move(db), config.blast);
}

std::unique_ptr<ModelGateway> build_gateway(const AppConfig& config,
                                            const TieredLexicon& lexicon) {
    if (config.persona == "mock-base" || config.persona == "mock-aligned") {
        MockModelConfig mc = config.persona == "mock-base"
                                 ? MockModelConfig::base_persona()
                                 : MockModelConfig::aligned_persona();
        if (config.compliance_rate) mc.compliance_rate = *config.compliance_rate;
        mc.seed = config.seed;
        mc.intent_tier = config.intent_tier;
        return std::make_unique<MockModel>(mc, &lexicon);
    }
    if (config.persona == "http") {
        return std::make_unique<HttpModel>(config.http);
    }
    if (config.persona == "replay") {
        if (config.replay_transcript.empty()) {
            throw ConfigError("replay persona requires replay_transcript");
        }
        return std::make_unique<ReplayModel>(config.replay_transcript);
    }
    throw ConfigError("unknown persona: " + config.persona);
}

}  // namespace bioguard
