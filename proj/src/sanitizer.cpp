#include "bioguard/sanitizer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include "bioguard/util.hpp"

namespace bioguard {

namespace {

constexpr std::size_t kBatchLines = 512;

std::string redaction_marker(Tier tier) {
    return std::string("[REDACTED:") + tier_name(tier) + "]";
}

// Merges overlapping/adjacent hit spans so replacements never collide.
std::vector<std::pair<std::size_t, std::size_t>> merged_spans(
    const std::vector<KeywordHit>& hits) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    spans.reserve(hits.size());
    for (const auto& h : hits) spans.emplace_back(h.start, h.end);
    std::sort(spans.begin(), spans.end());
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& s : spans) {
        if (!out.empty() && s.first <= out.back().second) {
            out.back().second = std::max(out.back().second, s.second);
        } else {
            out.push_back(s);
        }
    }
    return out;
}

struct LineResult {
    enum class Kind { quarantined, kept_raw, kept_unscanned, removed, redacted };
    Kind kind = Kind::kept_raw;
    std::string reject_reason;
    std::optional<std::string> rewritten;
    uint64_t keyword_hits = 0;
    uint64_t deep_hits = 0;
    std::string id;
};

}  // namespace

const char* sanitize_policy_name(SanitizePolicy p) {
    return p == SanitizePolicy::remove ? "remove" : "redact";
}

SanitizePolicy sanitize_policy_from_name(std::string_view name) {
    if (name == "remove") return SanitizePolicy::remove;
    if (name == "redact") return SanitizePolicy::redact;
    throw std::invalid_argument("unknown sanitize policy: " + std::string(name));
}

nlohmann::ordered_json SanitizeReport::to_json() const {
    return {
        {"schema_version", kSchemaVersion},
        {"tier", tier},
        {"policy", policy},
        {"total", total},
        {"removed", removed},
        {"redacted", redacted},
        {"kept", kept},
        {"kept_unscanned", kept_unscanned},
        {"quarantined", quarantined},
        {"removal_rate", removal_rate},
        {"per_signal_hits",
         {{"keyword", keyword_hits}, {"deep", deep_signal_hits}}},
        {"elapsed_ms", elapsed_ms},
    };
}

RecordOutcome sanitize_record(const nlohmann::ordered_json& record, const SanitizeOptions& options,
                              const GuardResources& resources) {
    RecordOutcome out;
    SignalConfig sig;
    sig.tier = options.tier;

    bool any_field = false;
    nlohmann::ordered_json rewritten = record;
    for (const auto& field : options.fields) {
        const auto it = record.find(field);
        if (it == record.end() || !it->is_string()) continue;
        any_field = true;
        const std::string text = it->get<std::string>();
        const NormalizedText folded = normalize(text);
        auto hits = keyword_scan(folded, resources.lexicon(), options.tier);
        if (options.deep) {
            if (fuzzy_scan(folded, resources.lexicon(), options.tier, sig).fired) ++out.deep_hits;
            if (semantic_scan(folded, resources.semantic_index(options.tier),
                              resources.embedder(), sig)
                    .fired) {
                ++out.deep_hits;
            }
            if (longseq_scan(text, sig).fired) ++out.deep_hits;
        }
        if (!hits.empty() && options.policy == SanitizePolicy::redact) {
            std::string patched = text;
            const auto spans = merged_spans(hits);
            for (auto it2 = spans.rbegin(); it2 != spans.rend(); ++it2) {
                patched.replace(it2->first, it2->second - it2->first,
                                redaction_marker(options.tier));
            }
            rewritten[field] = patched;
        }
        out.hits.insert(out.hits.end(), hits.begin(), hits.end());
    }

    if (!any_field) {
        out.action = RecordAction::kept_unscanned;
        return out;
    }
    const bool keyword_hit = !out.hits.empty();
    const bool flagged = keyword_hit || (options.deep && out.deep_hits > 0);
    if (options.policy == SanitizePolicy::remove) {
        out.action = flagged ? RecordAction::removed : RecordAction::kept;
    } else {
        out.action = keyword_hit ? RecordAction::redacted : RecordAction::kept;
        if (keyword_hit) out.rewritten = rewritten.dump();
    }
    return out;
}

SanitizeReport sanitize_corpus(const std::filesystem::path& input,
                               const std::filesystem::path& output,
                               const SanitizeOptions& options, const GuardResources& resources) {
    const auto start = std::chrono::steady_clock::now();
    std::ifstream in(input);
    if (!in) throw SanitizeError("cannot open corpus: " + input.string());
    std::ofstream out(output);
    if (!out) throw SanitizeError("cannot write output: " + output.string());

    SanitizeReport report;
    report.tier = tier_name(options.tier);
    report.policy = sanitize_policy_name(options.policy);

    std::ofstream rejects;  // opened on first quarantined line
    const std::filesystem::path rejects_path = output.string() + ".rejects";
    std::set<std::string> seen_ids;
    uint64_t line_no = 0;

    struct NumberedLine {
        uint64_t number;
        std::string text;
    };
    std::vector<NumberedLine> batch;
    batch.reserve(kBatchLines);
    std::vector<LineResult> results;

    auto process_batch = [&]() {
        results.assign(batch.size(), LineResult{});
        parallel_for(batch.size(), options.jobs, [&](std::size_t i) {
            LineResult& r = results[i];
            const std::string& line = batch[i].text;
            auto parsed = nlohmann::ordered_json::parse(line, nullptr, false);
            if (parsed.is_discarded() || !parsed.is_object()) {
                r.kind = LineResult::Kind::quarantined;
                r.reject_reason = "malformed JSON";
                return;
            }
            const auto id_it = parsed.find("id");
            if (id_it == parsed.end() || !id_it->is_string() ||
                id_it->get<std::string>().empty()) {
                r.kind = LineResult::Kind::quarantined;
                r.reject_reason = "missing or empty id";
                return;
            }
            r.id = id_it->get<std::string>();
            const RecordOutcome rec = sanitize_record(parsed, options, resources);
            r.keyword_hits = rec.hits.size();
            r.deep_hits = rec.deep_hits;
            switch (rec.action) {
                case RecordAction::removed: r.kind = LineResult::Kind::removed; break;
                case RecordAction::redacted:
                    r.kind = LineResult::Kind::redacted;
                    r.rewritten = rec.rewritten;
                    break;
                case RecordAction::kept_unscanned:
                    r.kind = LineResult::Kind::kept_unscanned;
                    break;
                case RecordAction::kept: r.kind = LineResult::Kind::kept_raw; break;
            }
        });
        // Ordered, single-threaded drain keeps output and sidecar bytes
        // independent of the worker count.
        for (std::size_t i = 0; i < batch.size(); ++i) {
            LineResult& r = results[i];
            if (r.kind != LineResult::Kind::quarantined && !r.id.empty() &&
                !seen_ids.insert(r.id).second) {
                r.kind = LineResult::Kind::quarantined;
                r.reject_reason = "duplicate id '" + r.id + "'";
            }
            switch (r.kind) {
                case LineResult::Kind::quarantined: {
                    ++report.quarantined;
                    if (!rejects.is_open()) rejects.open(rejects_path);
                    nlohmann::ordered_json row{{"line_number", batch[i].number},
                                               {"reason", r.reject_reason},
                                               {"raw", batch[i].text}};
                    rejects << row.dump() << '\n';
                    break;
                }
                case LineResult::Kind::removed:
                    ++report.total;
                    ++report.removed;
                    break;
                case LineResult::Kind::redacted:
                    ++report.total;
                    ++report.redacted;
                    ++report.kept;
                    out << *r.rewritten << '\n';
                    break;
                case LineResult::Kind::kept_unscanned:
                    ++report.total;
                    ++report.kept;
                    ++report.kept_unscanned;
                    out << batch[i].text << '\n';
                    break;
                case LineResult::Kind::kept_raw:
                    ++report.total;
                    ++report.kept;
                    out << batch[i].text << '\n';
                    break;
            }
            report.keyword_hits += r.keyword_hits;
            report.deep_signal_hits += r.deep_hits;
        }
        batch.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;  // blank lines are dropped, not quarantined
        batch.push_back({line_no, line});
        if (batch.size() >= kBatchLines) process_batch();
    }
    process_batch();

    report.removal_rate =
        report.total > 0 ? static_cast<double>(report.removed) / report.total : 0.0;
    report.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    return report;
}

}  // namespace bioguard
