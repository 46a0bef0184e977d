#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bioguard/guard.hpp"
#include "bioguard/lexicon.hpp"

namespace bioguard {

struct SanitizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SanitizePolicy { remove, redact };

const char* sanitize_policy_name(SanitizePolicy p);
SanitizePolicy sanitize_policy_from_name(std::string_view name);

inline const std::vector<std::string> kDefaultScanFields{"title", "abstract", "body_text"};

struct SanitizeOptions {
    Tier tier = Tier::L2_human;
    SanitizePolicy policy = SanitizePolicy::remove;
    std::vector<std::string> fields = kDefaultScanFields;
    // Off by default: the sanitizer is a keyword pass. Deep mode runs the
    // full runtime signal set on each scanned field and removes on any
    // fired signal (redaction spans still come from keyword hits only).
    bool deep = false;
    int jobs = 1;
};

struct SanitizeReport {
    std::string tier;
    std::string policy;
    uint64_t total = 0;    // parsed records
    uint64_t removed = 0;
    uint64_t redacted = 0;  // records with at least one redacted span
    uint64_t kept = 0;
    uint64_t kept_unscanned = 0;  // no configured field present
    uint64_t quarantined = 0;     // malformed lines diverted to the sidecar
    double removal_rate = 0.0;    // removed / total, 0 on an empty corpus
    uint64_t keyword_hits = 0;
    uint64_t deep_signal_hits = 0;
    int64_t elapsed_ms = 0;

    nlohmann::ordered_json to_json() const;
};

enum class RecordAction { kept, removed, redacted, kept_unscanned };

struct RecordOutcome {
    RecordAction action = RecordAction::kept;
    std::vector<KeywordHit> hits;  // across scanned fields
    uint64_t deep_hits = 0;
    // Populated for redacted records: the rewritten JSON line.
    std::optional<std::string> rewritten;
};

// Scans the configured fields of one parsed record. Remove policy drops
// the record on any hit; redact policy replaces each hit span with
// "[REDACTED:<tier>]" and keeps it. A record with none of the configured
// fields is kept unscanned. Deep mode (remove policy) additionally runs
// fuzzy/semantic/longseq via the guard resources.
RecordOutcome sanitize_record(const nlohmann::ordered_json& record, const SanitizeOptions& options,
                              const GuardResources& resources);

// Streams a JSONL corpus, preserving input order regardless of
// parallelism; kept lines in remove mode are copied through verbatim so
// re-sanitizing an output is a no-op. Malformed lines go to
// "<output>.rejects" with their line numbers and the run continues.
SanitizeReport sanitize_corpus(const std::filesystem::path& input,
                               const std::filesystem::path& output,
                               const SanitizeOptions& options, const GuardResources& resources);

}  // namespace bioguard
