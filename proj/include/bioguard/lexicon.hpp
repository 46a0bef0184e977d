#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bioguard/normalize.hpp"

namespace bioguard {

// Strictness tiers, total-ordered L1 < L2 < L3. Effective term sets are
// structurally nested: effective(L1) = file1, effective(L2) = file1 u file2,
// effective(L3) = file1 u file2 u file3, so raising the tier can only add
// terms.
enum class Tier { L1_custom = 0, L2_human = 1, L3_all = 2 };

inline constexpr std::array<Tier, 3> kAllTiers{Tier::L1_custom, Tier::L2_human, Tier::L3_all};

const char* tier_name(Tier t);
Tier tier_from_name(std::string_view name);  // throws std::invalid_argument

struct LexiconError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Whole-token match of a tier term against the folded text, reported in
// original-byte offsets.
struct KeywordHit {
    std::string term;
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const KeywordHit&, const KeywordHit&) = default;
};

class TieredLexicon {
public:
    static constexpr int kNormalizationVersion = 1;

    TieredLexicon() = default;

    // Raw (per-file) term set of one tier, normalized and deduplicated.
    const std::set<std::string>& file_terms(Tier t) const { return file_terms_[idx(t)]; }

    // Effective set at tier t: union of file terms at all tiers <= t,
    // sorted for deterministic iteration.
    const std::vector<std::string>& effective(Tier t) const { return effective_[idx(t)]; }

    const std::map<Tier, std::string>& source_paths() const { return source_paths_; }

    // Returns a new lexicon with `terms` (normalized here) added to the
    // given tier's file set. The receiver is not modified; guard updates
    // swap in the new value. Terms shorter than 2 folded characters are
    // rejected.
    TieredLexicon with_added_terms(Tier t, const std::vector<std::string>& terms) const;

    friend TieredLexicon load_lexicon(const std::map<Tier, std::filesystem::path>& paths);
    friend TieredLexicon lexicon_from_terms(const std::map<Tier, std::vector<std::string>>& terms);

private:
    static std::size_t idx(Tier t) { return static_cast<std::size_t>(t); }
    void rebuild_effective();

    std::array<std::set<std::string>, 3> file_terms_;
    std::array<std::vector<std::string>, 3> effective_;
    std::map<Tier, std::string> source_paths_;
};

// Loads the three tier files. Format: UTF-8, one term per line, '#' starts
// a comment line, blank lines ignored. Terms are normalized and
// deduplicated; a missing file or a file contributing no terms is an
// error naming the tier.
TieredLexicon load_lexicon(const std::map<Tier, std::filesystem::path>& paths);

// Convenience for loading `l1_custom.txt` / `l2_human.txt` / `l3_all.txt`
// from one directory.
TieredLexicon load_lexicon_dir(const std::filesystem::path& dir);

// Builds a lexicon from in-memory term lists (tests, red-team feedback).
TieredLexicon lexicon_from_terms(const std::map<Tier, std::vector<std::string>>& terms);

// Writes the per-tier file sets back out as the standard three files.
void save_lexicon(const TieredLexicon& lex, const std::filesystem::path& dir);

// All whole-token matches of tier terms in the folded text. Token
// boundaries are ASCII non-alphanumeric bytes (multi-byte characters are
// token constituents). Hits are sorted by start offset and deduplicated.
std::vector<KeywordHit> keyword_scan(const NormalizedText& text, const TieredLexicon& lexicon,
                                     Tier tier);

}  // namespace bioguard
