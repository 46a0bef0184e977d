#include "bioguard/lexicon.hpp"

#include <algorithm>
#include <fstream>

namespace bioguard {

namespace {

bool is_token_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c >= 0x80;
}

// Folded character count (code points, not bytes) for the >=2-char rule.
std::size_t folded_length(std::string_view folded) {
    std::size_t n = 0;
    for (unsigned char c : folded) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::string normalize_term(std::string_view raw) {
    return normalize(raw).folded;
}

}  // namespace

const char* tier_name(Tier t) {
    switch (t) {
        case Tier::L1_custom: return "L1_custom";
        case Tier::L2_human: return "L2_human";
        case Tier::L3_all: return "L3_all";
    }
    return "unknown";
}

Tier tier_from_name(std::string_view name) {
    for (Tier t : kAllTiers) {
        if (name == tier_name(t)) return t;
    }
    // Short aliases accepted on the CLI.
    if (name == "L1") return Tier::L1_custom;
    if (name == "L2") return Tier::L2_human;
    if (name == "L3") return Tier::L3_all;
    throw std::invalid_argument("unknown tier name: " + std::string(name));
}

void TieredLexicon::rebuild_effective() {
    std::set<std::string> acc;
    for (Tier t : kAllTiers) {
        const auto& file = file_terms_[idx(t)];
        acc.insert(file.begin(), file.end());
        effective_[idx(t)].assign(acc.begin(), acc.end());
    }
}

TieredLexicon TieredLexicon::with_added_terms(Tier t, const std::vector<std::string>& terms) const {
    TieredLexicon next = *this;
    for (const auto& raw : terms) {
        std::string term = normalize_term(raw);
        if (folded_length(term) < 2) {
            throw LexiconError("term too short after normalization: \"" + raw + "\"");
        }
        next.file_terms_[idx(t)].insert(std::move(term));
    }
    next.rebuild_effective();
    return next;
}

TieredLexicon load_lexicon(const std::map<Tier, std::filesystem::path>& paths) {
    TieredLexicon lex;
    for (Tier t : kAllTiers) {
        auto it = paths.find(t);
        if (it == paths.end()) {
            throw LexiconError(std::string("no lexicon file given for tier ") + tier_name(t));
        }
        std::ifstream in(it->second);
        if (!in) {
            throw LexiconError(std::string("cannot open lexicon file for tier ") + tier_name(t) +
                               ": " + it->second.string());
        }
        auto& terms = lex.file_terms_[TieredLexicon::idx(t)];
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') continue;
            std::string folded = normalize_term(line);
            if (folded.empty()) continue;
            if (folded_length(folded) < 2) {
                throw LexiconError(std::string("tier ") + tier_name(t) + " line " +
                                   std::to_string(line_no) +
                                   ": term shorter than 2 characters after normalization");
            }
            terms.insert(std::move(folded));
        }
        if (terms.empty()) {
            throw LexiconError(std::string("tier ") + tier_name(t) + " file " +
                               it->second.string() + " contains no terms");
        }
        lex.source_paths_[t] = it->second.string();
    }
    lex.rebuild_effective();
    return lex;
}

TieredLexicon load_lexicon_dir(const std::filesystem::path& dir) {
    return load_lexicon({{Tier::L1_custom, dir / "l1_custom.txt"},
                         {Tier::L2_human, dir / "l2_human.txt"},
                         {Tier::L3_all, dir / "l3_all.txt"}});
}

TieredLexicon lexicon_from_terms(const std::map<Tier, std::vector<std::string>>& terms) {
    TieredLexicon lex;
    for (const auto& [tier, list] : terms) {
        for (const auto& raw : list) {
            std::string folded = normalize_term(raw);
            if (folded_length(folded) < 2) {
                throw LexiconError("term too short after normalization: \"" + raw + "\"");
            }
            lex.file_terms_[TieredLexicon::idx(tier)].insert(std::move(folded));
        }
    }
    lex.rebuild_effective();
    return lex;
}

void save_lexicon(const TieredLexicon& lex, const std::filesystem::path& dir) {
    const std::array<const char*, 3> names{"l1_custom.txt", "l2_human.txt", "l3_all.txt"};
    std::filesystem::create_directories(dir);
    for (Tier t : kAllTiers) {
        std::ofstream out(dir / names[static_cast<std::size_t>(t)]);
        if (!out) {
            throw LexiconError("cannot write lexicon file in " + dir.string());
        }
        for (const auto& term : lex.file_terms(t)) out << term << '\n';
    }
}

std::vector<KeywordHit> keyword_scan(const NormalizedText& text, const TieredLexicon& lexicon,
                                     Tier tier) {
    std::vector<KeywordHit> hits;
    const std::string& folded = text.folded;
    for (const auto& term : lexicon.effective(tier)) {
        std::size_t from = 0;
        while (true) {
            std::size_t at = folded.find(term, from);
            if (at == std::string::npos) break;
            const std::size_t end = at + term.size();
            const bool left_ok = at == 0 || !is_token_byte(folded[at - 1]);
            const bool right_ok = end == folded.size() || !is_token_byte(folded[end]);
            if (left_ok && right_ok) {
                auto [ob, oe] = text.original_span(at, end);
                hits.push_back({term, ob, oe});
            }
            from = at + 1;
        }
    }
    std::sort(hits.begin(), hits.end(), [](const KeywordHit& a, const KeywordHit& b) {
        return std::tie(a.start, a.end, a.term) < std::tie(b.start, b.end, b.term);
    });
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    return hits;
}

}  // namespace bioguard
