#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "bioguard/lexicon.hpp"
#include "bioguard/model_gateway.hpp"
#include "bioguard/seqalign.hpp"
#include "bioguard/signals.hpp"
#include "bioguard/stats.hpp"

namespace bioguard {

struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GuardMode { strict, warn };
enum class GuardPosition { pre, post };
enum class Verdict { allow, warn, block };

const char* guard_mode_name(GuardMode m);
GuardMode guard_mode_from_name(std::string_view name);
const char* verdict_name(Verdict v);

struct GuardConfig {
    GuardPosition position = GuardPosition::pre;
    GuardMode mode = GuardMode::strict;
    SignalConfig signals;
    bool blast_enabled = false;

    // The BLAST screen runs only when blast_enabled is set and the signal
    // is in the enabled set; the stock presets keep the two in step.
    bool blast_active() const {
        return blast_enabled && signals.enabled.count(SignalKind::blast) > 0;
    }

    static GuardConfig pre_default();   // strict, BLAST off
    static GuardConfig post_default();  // strict, BLAST on
    static GuardConfig disabled(GuardPosition position);  // no signals at all
};

// Immutable evaluation resources shared by any number of concurrent guard
// evaluations. Rule updates produce a whole new GuardResources value.
class GuardResources {
public:
    GuardResources(TieredLexicon lexicon, std::shared_ptr<const Embedder> embedder,
                   std::optional<FastaDb> db, BlastThresholds blast = {});

    const TieredLexicon& lexicon() const { return lexicon_; }
    const Embedder& embedder() const { return *embedder_; }
    const FastaDb* db() const { return db_ ? &*db_ : nullptr; }
    const SemanticIndex& semantic_index(Tier t) const {
        return semantic_[static_cast<std::size_t>(t)];
    }
    const BlastThresholds& blast_thresholds() const { return blast_; }

    // New resources with extra lexicon terms (red-team feedback); phrase
    // embeddings are recomputed for the new lexicon value.
    GuardResources with_added_terms(Tier tier, const std::vector<std::string>& terms) const;

private:
    TieredLexicon lexicon_;
    std::shared_ptr<const Embedder> embedder_;
    std::optional<FastaDb> db_;
    BlastThresholds blast_;
    std::array<SemanticIndex, 3> semantic_;
};

struct SignalScore {
    bool enabled = false;
    bool fired = false;
    double score = 0.0;
    double threshold = 0.0;
    std::string evidence;
};

// One score row per signal; disabled signals are present but never fired.
using SignalScores = std::map<SignalKind, SignalScore>;

struct GuardDecision {
    Verdict verdict = Verdict::allow;
    std::optional<SignalKind> reason;  // nullopt = none
    SignalScores scores;
};

// Scores every enabled signal independently. Throws GuardError when BLAST
// is active but no db is loaded.
SignalScores evaluate_signals(const std::string& text, const GuardConfig& config,
                              const GuardResources& resources);

// Lexicographic decision: the reason is the highest-priority fired signal
// in the order blast > longseq > semantic > fuzzy > keyword; strict mode
// blocks on any fired signal, warn mode warns, nothing fired allows.
GuardDecision decide(const SignalScores& scores, GuardMode mode);

GuardDecision run_guard(const std::string& text, const GuardConfig& config,
                        const GuardResources& resources);

// User-visible notice substituted for blocked content.
std::string block_notice(std::optional<SignalKind> reason);

struct PipelineOutcome {
    enum class Status { ok, model_error };

    std::string input;
    GuardDecision pre_decision;
    std::optional<std::string> model_output;
    std::optional<GuardDecision> post_decision;
    std::string final_text;
    InterceptStage intercepted_at = InterceptStage::none;
    Status status = Status::ok;
    std::string error;
    bool payload_in_final = false;  // sentinel judgment on final_text
    std::optional<bool> label_harmful;
};

// Full pre -> model -> post pass. A pre-guard block short-circuits (zero
// model calls); gateway failures produce a model_error outcome, which the
// statistics count separately from blocks.
PipelineOutcome run_pipeline(const std::string& input, const GuardConfig& pre,
                             ModelGateway& model, const GuardConfig& post,
                             const GuardResources& resources);

OutcomeRow outcome_row(const PipelineOutcome& o, bool harmful);

nlohmann::ordered_json decision_to_json(const GuardDecision& d);
nlohmann::ordered_json outcome_to_json(const PipelineOutcome& o);

}  // namespace bioguard
