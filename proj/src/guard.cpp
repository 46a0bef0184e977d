#include "bioguard/guard.hpp"

#include <array>

#include "bioguard/util.hpp"

namespace bioguard {

namespace {

// Decision priority, strongest first.
constexpr std::array<SignalKind, 5> kPriority{SignalKind::blast, SignalKind::longseq,
                                              SignalKind::semantic, SignalKind::fuzzy,
                                              SignalKind::keyword};

}  // namespace

const char* guard_mode_name(GuardMode m) {
    return m == GuardMode::strict ? "strict" : "warn";
}

GuardMode guard_mode_from_name(std::string_view name) {
    if (name == "strict") return GuardMode::strict;
    if (name == "warn") return GuardMode::warn;
    throw std::invalid_argument("unknown guard mode: " + std::string(name));
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::allow: return "allow";
        case Verdict::warn: return "warn";
        case Verdict::block: return "block";
    }
    return "unknown";
}

GuardConfig GuardConfig::pre_default() {
    GuardConfig c;
    c.position = GuardPosition::pre;
    c.mode = GuardMode::strict;
    c.blast_enabled = false;
    return c;
}

GuardConfig GuardConfig::post_default() {
    GuardConfig c;
    c.position = GuardPosition::post;
    c.mode = GuardMode::strict;
    c.blast_enabled = true;
    c.signals.enabled.insert(SignalKind::blast);
    return c;
}

GuardConfig GuardConfig::disabled(GuardPosition position) {
    GuardConfig c;
    c.position = position;
    c.signals.enabled.clear();
    c.blast_enabled = false;
    return c;
}

GuardResources::GuardResources(TieredLexicon lexicon, std::shared_ptr<const Embedder> embedder,
                               std::optional<FastaDb> db, BlastThresholds blast)
    : lexicon_(std::move(lexicon)),
      embedder_(std::move(embedder)),
      db_(std::move(db)),
      blast_(blast) {
    if (!embedder_) embedder_ = default_embedder();
    for (Tier t : kAllTiers) {
        semantic_[static_cast<std::size_t>(t)] = SemanticIndex(lexicon_, t, *embedder_);
    }
}

GuardResources GuardResources::with_added_terms(Tier tier,
                                                const std::vector<std::string>& terms) const {
    return GuardResources(lexicon_.with_added_terms(tier, terms), embedder_, db_, blast_);
}

SignalScores evaluate_signals(const std::string& text, const GuardConfig& config,
                              const GuardResources& resources) {
    const SignalConfig& sc = config.signals;
    SignalScores scores;
    for (SignalKind k : kPriority) {
        SignalScore s;
        s.enabled = k == SignalKind::blast ? config.blast_active() : sc.enabled.count(k) > 0;
        scores[k] = s;
    }

    const NormalizedText folded = normalize(text);

    if (auto& s = scores[SignalKind::keyword]; s.enabled) {
        const auto hits = keyword_scan(folded, resources.lexicon(), sc.tier);
        s.score = static_cast<double>(hits.size());
        s.threshold = 1.0;
        s.fired = !hits.empty();
        if (!hits.empty()) s.evidence = hits.front().term;
    }
    if (auto& s = scores[SignalKind::fuzzy]; s.enabled) {
        const FuzzyResult r = fuzzy_scan(folded, resources.lexicon(), sc.tier, sc);
        s.score = r.score;
        s.threshold = sc.fuzzy_threshold;
        s.fired = r.fired;
        s.evidence = r.best_term;
    }
    if (auto& s = scores[SignalKind::semantic]; s.enabled) {
        const SemanticResult r =
            semantic_scan(folded, resources.semantic_index(sc.tier), resources.embedder(), sc);
        s.score = r.score;
        s.threshold = sc.semantic_threshold;
        s.fired = r.fired;
        s.evidence = r.best_phrase;
    }
    if (auto& s = scores[SignalKind::longseq]; s.enabled) {
        const LongSeqResult r = longseq_scan(text, sc);
        s.score = r.length;
        s.threshold = sc.longseq_min_len;
        s.fired = r.fired;
        if (r.kind != SeqKind::none) s.evidence = seq_kind_name(r.kind);
    }
    if (auto& s = scores[SignalKind::blast]; s.enabled) {
        if (resources.db() == nullptr) {
            throw GuardError("BLAST screen enabled but no sequence db is loaded");
        }
        BlastThresholds thresholds = resources.blast_thresholds();
        const BlastResult r = blast_scan(text, *resources.db(), thresholds);
        s.score = r.best_identity_gated;
        s.threshold = thresholds.identity;
        s.fired = r.fired;
        if (r.best) {
            s.evidence = r.best->db_id;
        } else if (!r.best_identity_db_id.empty()) {
            s.evidence = r.best_identity_db_id;
        }
    }
    return scores;
}

GuardDecision decide(const SignalScores& scores, GuardMode mode) {
    GuardDecision d;
    d.scores = scores;
    for (SignalKind k : kPriority) {
        const auto it = scores.find(k);
        if (it != scores.end() && it->second.enabled && it->second.fired) {
            d.reason = k;
            break;
        }
    }
    d.verdict = !d.reason ? Verdict::allow
                          : (mode == GuardMode::strict ? Verdict::block : Verdict::warn);
    return d;
}

GuardDecision run_guard(const std::string& text, const GuardConfig& config,
                        const GuardResources& resources) {
    return decide(evaluate_signals(text, config, resources), config.mode);
}

std::string block_notice(std::optional<SignalKind> reason) {
    return std::string("[BLOCKED: biosecurity policy — reason=") +
           (reason ? signal_name(*reason) : "none") + "]";
}

PipelineOutcome run_pipeline(const std::string& input, const GuardConfig& pre,
                             ModelGateway& model, const GuardConfig& post,
                             const GuardResources& resources) {
    PipelineOutcome o;
    o.input = input;
    o.pre_decision = run_guard(input, pre, resources);
    if (o.pre_decision.verdict == Verdict::block) {
        o.intercepted_at = InterceptStage::pre;
        o.final_text = block_notice(o.pre_decision.reason);
        return o;
    }
    const GenerateResult gen = model.generate(input);
    if (!gen.ok) {
        o.status = PipelineOutcome::Status::model_error;
        o.error = gen.error;
        o.intercepted_at = InterceptStage::none;
        return o;
    }
    o.model_output = gen.completion;
    o.post_decision = run_guard(gen.completion, post, resources);
    if (o.post_decision->verdict == Verdict::block) {
        o.intercepted_at = InterceptStage::post;
        o.final_text = block_notice(o.post_decision->reason);
    } else {
        o.intercepted_at = InterceptStage::none;
        o.final_text = gen.completion;
    }
    o.payload_in_final = contains_payload_sentinel(o.final_text);
    return o;
}

OutcomeRow outcome_row(const PipelineOutcome& o, bool harmful) {
    OutcomeRow row;
    row.harmful = harmful;
    row.intercepted_at = o.intercepted_at;
    row.payload_in_final = o.payload_in_final;
    row.model_error = o.status == PipelineOutcome::Status::model_error;
    return row;
}

nlohmann::ordered_json decision_to_json(const GuardDecision& d) {
    nlohmann::ordered_json scores;
    for (const auto& [kind, s] : d.scores) {
        scores[signal_name(kind)] = {
            {"enabled", s.enabled}, {"score", s.score},       {"threshold", s.threshold},
            {"fired", s.fired},     {"evidence", s.evidence},
        };
    }
    return {
        {"verdict", verdict_name(d.verdict)},
        {"reason", d.reason ? signal_name(*d.reason) : "none"},
        {"scores", scores},
    };
}

nlohmann::ordered_json outcome_to_json(const PipelineOutcome& o) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["input"] = o.input;
    if (o.label_harmful) j["label"] = *o.label_harmful ? "harmful" : "safe";
    j["pre_decision"] = decision_to_json(o.pre_decision);
    j["model_output"] = o.model_output ? nlohmann::ordered_json(*o.model_output)
                                       : nlohmann::ordered_json(nullptr);
    j["post_decision"] =
        o.post_decision ? decision_to_json(*o.post_decision) : nlohmann::ordered_json(nullptr);
    j["final_text"] = o.final_text;
    j["intercepted_at"] = intercept_stage_name(o.intercepted_at);
    j["status"] = o.status == PipelineOutcome::Status::ok ? "ok" : "model_error";
    if (!o.error.empty()) j["error"] = o.error;
    j["payload_in_final"] = o.payload_in_final;
    return j;
}

}  // namespace bioguard
