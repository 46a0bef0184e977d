#include "bioguard/signals.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "bioguard/util.hpp"

namespace bioguard {

namespace {

constexpr std::size_t kEmbedderDim = 1024;

bool is_dna_residue(char c) {
    return c == 'A' || c == 'C' || c == 'G' || c == 'T' || c == 'U' || c == 'N';
}

bool is_amino_residue(char c) {
    static constexpr std::string_view kAmino = "ACDEFGHIKLMNPQRSTVWY";
    return kAmino.find(c) != std::string_view::npos;
}

bool is_run_filler(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == '-';
}

char upper_ascii(char c) {
    return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
}

// Longest common subsequence length, two-row DP.
std::size_t lcs_length(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Maximal residue runs over one alphabet, whitespace/hyphens elided.
std::vector<SeqRun> scan_runs(std::string_view text, bool (*in_alphabet)(char), SeqKind kind) {
    std::vector<SeqRun> runs;
    SeqRun cur;
    bool open = false;
    auto close = [&]() {
        if (open && !cur.residues.empty()) runs.push_back(cur);
        cur = SeqRun{};
        open = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char u = upper_ascii(text[i]);
        if (in_alphabet(u)) {
            if (!open) {
                open = true;
                cur.start = i;
                cur.kind = kind;
            }
            cur.residues.push_back(u);
            cur.end = i + 1;
        } else if (is_run_filler(text[i])) {
            continue;  // elided inside a run, ignored between runs
        } else {
            close();
        }
    }
    close();
    return runs;
}

}  // namespace

const char* signal_name(SignalKind k) {
    switch (k) {
        case SignalKind::keyword: return "keyword";
        case SignalKind::fuzzy: return "fuzzy";
        case SignalKind::semantic: return "semantic";
        case SignalKind::longseq: return "longseq";
        case SignalKind::blast: return "blast";
    }
    return "unknown";
}

SignalKind signal_from_name(std::string_view name) {
    for (SignalKind k : {SignalKind::keyword, SignalKind::fuzzy, SignalKind::semantic,
                         SignalKind::longseq, SignalKind::blast}) {
        if (name == signal_name(k)) return k;
    }
    throw std::invalid_argument("unknown signal name: " + std::string(name));
}

const char* seq_kind_name(SeqKind k) {
    switch (k) {
        case SeqKind::none: return "none";
        case SeqKind::dna: return "dna";
        case SeqKind::protein: return "protein";
    }
    return "unknown";
}

namespace {

class TrigramHashEmbedder final : public Embedder {
public:
    std::size_t dim() const override { return kEmbedderDim; }

    std::vector<double> embed(std::string_view text) const override {
        std::vector<double> v(kEmbedderDim, 0.0);
        if (text.empty()) return v;  // zero vector flags the empty input
        if (text.size() < 3) {
            v[fnv1a64(text) % kEmbedderDim] += 1.0;
        } else {
            for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
                v[fnv1a64(text.substr(i, 3)) % kEmbedderDim] += 1.0;
            }
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }
};

}  // namespace

std::unique_ptr<Embedder> default_embedder() {
    return std::make_unique<TrigramHashEmbedder>();
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine: dimension mismatch");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

double fuzzy_partial_ratio(std::string_view x, std::string_view y) {
    std::string_view a = x.size() <= y.size() ? x : y;  // shorter
    std::string_view b = x.size() <= y.size() ? y : x;  // longer
    const std::size_t m = a.size();
    if (m == 0) return 100.0;
    // indel(a, w) = |a| + |w| - 2*LCS(a, w); with |w| = |a| the similarity
    // reduces to LCS(a, w) / |a|.
    std::size_t best_lcs = 0;
    for (std::size_t i = 0; i + m <= b.size(); ++i) {
        best_lcs = std::max(best_lcs, lcs_length(a, b.substr(i, m)));
        if (best_lcs == m) break;
    }
    return 100.0 * static_cast<double>(best_lcs) / static_cast<double>(m);
}

FuzzyResult fuzzy_scan(const NormalizedText& text, const TieredLexicon& lexicon, Tier tier,
                       const SignalConfig& config) {
    FuzzyResult out;
    if (text.folded.empty()) return out;
    for (const auto& term : lexicon.effective(tier)) {
        const double score = fuzzy_partial_ratio(term, text.folded);
        if (score > out.score) {
            out.score = score;
            out.best_term = term;
        }
    }
    out.fired = !lexicon.effective(tier).empty() && out.score >= config.fuzzy_threshold;
    return out;
}

SemanticIndex::SemanticIndex(const TieredLexicon& lexicon, Tier tier, const Embedder& embedder) {
    phrases_ = lexicon.effective(tier);
    embeddings_.reserve(phrases_.size());
    for (const auto& phrase : phrases_) {
        embeddings_.push_back(embedder.embed(phrase));
    }
}

SemanticResult semantic_scan(const NormalizedText& text, const SemanticIndex& index,
                             const Embedder& embedder, const SignalConfig& config) {
    SemanticResult out;
    if (text.folded.empty() || index.phrases().empty()) return out;
    const std::vector<double> v = embedder.embed(text.folded);
    bool first = true;
    for (std::size_t i = 0; i < index.phrases().size(); ++i) {
        const double c = cosine(v, index.embeddings()[i]);
        if (first || c > out.score) {
            out.score = c;
            out.best_phrase = index.phrases()[i];
            first = false;
        }
    }
    out.fired = out.score >= config.semantic_threshold;
    return out;
}

LongSeqResult longseq_scan(std::string_view text, const SignalConfig& config) {
    LongSeqResult out;
    // Two passes: the amino pass absorbs DNA letters except U, so a run
    // mixing amino-only letters into a DNA stretch is still found whole.
    const auto dna_runs = scan_runs(text, &is_dna_residue, SeqKind::dna);
    const auto amino_runs = scan_runs(text, &is_amino_residue, SeqKind::protein);
    int dna_best = 0, amino_best = 0;
    const SeqRun* dna_run = nullptr;
    const SeqRun* amino_run = nullptr;
    for (const auto& r : dna_runs) {
        if (static_cast<int>(r.residues.size()) > dna_best) {
            dna_best = static_cast<int>(r.residues.size());
            dna_run = &r;
        }
    }
    for (const auto& r : amino_runs) {
        if (static_cast<int>(r.residues.size()) > amino_best) {
            amino_best = static_cast<int>(r.residues.size());
            amino_run = &r;
        }
    }
    // A run made solely of DNA letters is DNA; ties go to the DNA class.
    const SeqRun* best = dna_best >= amino_best ? dna_run : amino_run;
    if (best != nullptr) {
        out.length = std::max(dna_best, amino_best);
        out.kind = best->kind;
        out.start = best->start;
        out.end = best->end;
    }
    out.fired = out.length >= config.longseq_min_len;
    return out;
}

std::vector<SeqRun> extract_seq_runs(std::string_view text, int min_len) {
    std::vector<SeqRun> out;
    for (const auto& r : scan_runs(text, &is_dna_residue, SeqKind::dna)) {
        if (static_cast<int>(r.residues.size()) >= min_len) out.push_back(r);
    }
    for (const auto& r : scan_runs(text, &is_amino_residue, SeqKind::protein)) {
        if (static_cast<int>(r.residues.size()) >= min_len) out.push_back(r);
    }
    return out;
}

}  // namespace bioguard
