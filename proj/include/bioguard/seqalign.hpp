#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bioguard/signals.hpp"

namespace bioguard {

struct SeqAlignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DbAlphabet { dna, protein };

struct FastaRecord {
    std::string id;
    std::string description;
    std::string sequence;  // uppercased, whitespace stripped
};

struct FastaDb {
    std::vector<FastaRecord> records;
    DbAlphabet alphabet = DbAlphabet::dna;
    std::string source_path;
};

// Standard FASTA: '>' lines start records (id = first word, rest is the
// description), sequence lines are concatenated with whitespace stripped
// and uppercased. The alphabet is detected from the residues: sequences
// restricted to {A,C,G,T,U,N} parse as DNA, anything else must fit the
// amino-acid alphabet (plus X/N/* wildcards). Errors: sequence data before
// the first header, empty records, duplicate ids, residues outside both
// alphabets, empty files.
FastaDb parse_fasta(const std::filesystem::path& path);

struct AlignScoring {
    int match = 2;
    int mismatch = -1;
    int gap = -2;
};

struct AlignmentHit {
    std::string db_id;
    double identity = 0.0;  // matched columns / alignment columns
    int aligned_len = 0;    // alignment columns, gaps included
    int matches = 0;
    int score = 0;
    std::pair<std::size_t, std::size_t> query_span;    // [begin, end) in the query
    std::pair<std::size_t, std::size_t> subject_span;  // [begin, end) in the subject
};

// Optimal local alignment under the given scoring, with traceback.
// Deterministic: ties prefer the earliest best cell in row-major order and
// diagonal moves during traceback. Returns nullopt when the best score is
// <= 0 (no local similarity at all). Throws SeqAlignError when the inputs
// cannot share an alphabet.
std::optional<AlignmentHit> smith_waterman(std::string_view query, std::string_view subject,
                                           const AlignScoring& scoring = {});

// True when the two sequences share at least one exact k-mer. Used as the
// screening prefilter: any alignment with >= min_len columns at identity
// >= 0.88 contains a run of consecutive match columns of length
//   ceil(ceil(0.88 * 60) / (floor(0.12 * 60) + 1)) = 7,
// i.e. a shared 7-mer, so k <= 7 cannot miss a qualifying hit. (An 11-mer
// filter can: space one mismatch every 8 columns and no 11-mer survives.)
bool shares_kmer(std::string_view a, std::string_view b, int k);

struct BlastThresholds {
    double identity = 0.88;
    int min_len = 60;
    int seed_len = 7;
    bool use_seed_prefilter = true;
};

struct BlastResult {
    bool fired = false;
    // Populated only when fired; the best qualifying hit by (score, db
    // record order, query span start). Non-firing scans report no hit so
    // the prefiltered and exhaustive paths are bit-identical.
    std::optional<AlignmentHit> best;
    // Max identity over evaluated alignments meeting the length gate,
    // regardless of the identity gate; the signal score the guard and the
    // threshold sweep compare against the identity threshold.
    double best_identity_gated = 0.0;
    std::string best_identity_db_id;
    std::size_t candidates = 0;
    std::size_t pairs_aligned = 0;
    std::size_t pairs_skipped = 0;
};

// BLAST-style screen: extracts residue runs of at least min_len from the
// text, aligns each against every db record (pairs without a shared
// seed_len-mer are skipped when the prefilter is on), and fires iff some
// alignment reaches both the identity and length gates.
BlastResult blast_scan(std::string_view text, const FastaDb& db,
                       const BlastThresholds& thresholds = {}, const AlignScoring& scoring = {});

}  // namespace bioguard
