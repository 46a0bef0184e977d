#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bioguard/lexicon.hpp"
#include "bioguard/normalize.hpp"

namespace bioguard {

enum class SignalKind { keyword = 0, fuzzy, semantic, longseq, blast };

const char* signal_name(SignalKind k);
SignalKind signal_from_name(std::string_view name);  // throws std::invalid_argument

struct SignalConfig {
    double fuzzy_threshold = 87.0;
    double semantic_threshold = 0.67;
    int longseq_min_len = 60;
    Tier tier = Tier::L2_human;
    std::set<SignalKind> enabled = {SignalKind::keyword, SignalKind::fuzzy, SignalKind::semantic,
                                    SignalKind::longseq};
};

// Text embedding behind the semantic signal. Implementations must be
// deterministic and return a unit-norm vector for nonempty input; the
// empty string maps to the zero vector.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(std::string_view folded_text) const = 0;
};

// Deterministic character-trigram bag embedder: every byte trigram of the
// folded text is FNV-1a hashed into one of 1024 buckets, counts
// accumulated, then L2-normalized. Inputs shorter than 3 characters are
// hashed whole as a single feature.
std::unique_ptr<Embedder> default_embedder();

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Best normalized indel similarity of the shorter string against every
// window of the longer with the same length, scaled to [0, 100]. With a
// the shorter and b the longer input:
//   score = 100 * max_w (1 - indel(a, w) / (|a| + |w|))
// over windows w of b, |w| = |a|; indel allows unit-cost inserts/deletes
// only. An empty shorter input scores 100 by convention. Symmetric in its
// arguments; equals 100 iff the shorter appears verbatim in the longer.
// Inputs are expected to be already folded.
double fuzzy_partial_ratio(std::string_view a, std::string_view b);

struct FuzzyResult {
    double score = 0.0;
    std::string best_term;
    bool fired = false;
};

// Max partial ratio of any tier term against the folded text. Empty tier
// or empty folded text scores 0 and never fires.
FuzzyResult fuzzy_scan(const NormalizedText& text, const TieredLexicon& lexicon, Tier tier,
                       const SignalConfig& config);

// Tier phrases with their embeddings, precomputed once per lexicon value.
class SemanticIndex {
public:
    SemanticIndex() = default;
    SemanticIndex(const TieredLexicon& lexicon, Tier tier, const Embedder& embedder);

    const std::vector<std::string>& phrases() const { return phrases_; }
    const std::vector<std::vector<double>>& embeddings() const { return embeddings_; }

private:
    std::vector<std::string> phrases_;
    std::vector<std::vector<double>> embeddings_;
};

struct SemanticResult {
    double score = 0.0;
    std::string best_phrase;
    bool fired = false;
};

// Max cosine between the folded text's embedding and any indexed phrase.
// Empty text (zero embedding) scores 0 and never fires.
SemanticResult semantic_scan(const NormalizedText& text, const SemanticIndex& index,
                             const Embedder& embedder, const SignalConfig& config);

enum class SeqKind { none, dna, protein };

const char* seq_kind_name(SeqKind k);

struct LongSeqResult {
    int length = 0;       // residue count of the longest run
    SeqKind kind = SeqKind::none;
    std::size_t start = 0;  // byte span of that run in the input text
    std::size_t end = 0;
    bool fired = false;
};

struct SeqRun {
    std::string residues;   // uppercased, whitespace/hyphens elided
    std::size_t start = 0;  // byte span in the input text
    std::size_t end = 0;
    SeqKind kind = SeqKind::none;
};

// Longest run of DNA ({A,C,G,T,U,N}) or amino-acid (20-letter) residues in
// the uppercase-folded text. Whitespace and hyphens inside a run are
// elided and do not break it. A run made solely of DNA letters classifies
// as DNA, otherwise as protein. Case-insensitive by construction.
LongSeqResult longseq_scan(std::string_view text, const SignalConfig& config);

// All maximal residue runs of at least min_len residues, for the
// alignment screen's candidate extraction. Runs over the DNA alphabet are
// reported as dna, others as protein.
std::vector<SeqRun> extract_seq_runs(std::string_view text, int min_len);

}  // namespace bioguard
