#include "bioguard/seqalign.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_set>

#include "bioguard/util.hpp"

namespace bioguard {

namespace {

constexpr std::string_view kDnaAlphabet = "ACGTUN";
constexpr std::string_view kProteinAlphabet = "ACDEFGHIKLMNPQRSTVWYXN*";

bool fits_alphabet(std::string_view seq, std::string_view alphabet) {
    return std::all_of(seq.begin(), seq.end(),
                       [&](char c) { return alphabet.find(c) != std::string_view::npos; });
}

}  // namespace

FastaDb parse_fasta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw SeqAlignError("cannot open FASTA file: " + path.string());
    }
    FastaDb db;
    db.source_path = path.string();
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    bool have_record = false;
    auto finish_record = [&]() {
        if (!have_record) return;
        if (db.records.back().sequence.empty()) {
            throw SeqAlignError("FASTA record '" + db.records.back().id + "' in " +
                                path.string() + " has no sequence data");
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            finish_record();
            std::string header = line.substr(1);
            const auto sp = header.find_first_of(" \t");
            FastaRecord rec;
            rec.id = header.substr(0, sp);
            if (sp != std::string::npos) {
                const auto ds = header.find_first_not_of(" \t", sp);
                if (ds != std::string::npos) rec.description = header.substr(ds);
            }
            if (rec.id.empty()) {
                throw SeqAlignError("FASTA header with empty id at line " +
                                    std::to_string(line_no) + " in " + path.string());
            }
            if (!seen_ids.insert(rec.id).second) {
                throw SeqAlignError("duplicate FASTA id '" + rec.id + "' at line " +
                                    std::to_string(line_no) + " in " + path.string());
            }
            db.records.push_back(std::move(rec));
            have_record = true;
        } else {
            if (!have_record) {
                throw SeqAlignError("sequence data before any FASTA header at line " +
                                    std::to_string(line_no) + " in " + path.string());
            }
            for (char c : line) {
                if (std::isspace(static_cast<unsigned char>(c))) continue;
                db.records.back().sequence.push_back(
                    static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            }
        }
    }
    finish_record();
    if (db.records.empty()) {
        throw SeqAlignError("FASTA file contains no records: " + path.string());
    }

    bool all_dna = true;
    for (const auto& rec : db.records) {
        if (!fits_alphabet(rec.sequence, kDnaAlphabet)) all_dna = false;
    }
    if (all_dna) {
        db.alphabet = DbAlphabet::dna;
    } else {
        db.alphabet = DbAlphabet::protein;
        for (const auto& rec : db.records) {
            if (!fits_alphabet(rec.sequence, kProteinAlphabet)) {
                throw SeqAlignError("record '" + rec.id + "' in " + path.string() +
                                    " contains residues outside the DNA and protein alphabets");
            }
        }
    }
    return db;
}

std::optional<AlignmentHit> smith_waterman(std::string_view query, std::string_view subject,
                                           const AlignScoring& scoring) {
    if (query.empty() || subject.empty()) {
        throw SeqAlignError("smith_waterman requires nonempty sequences");
    }
    const bool q_dna = fits_alphabet(query, kDnaAlphabet);
    const bool s_dna = fits_alphabet(subject, kDnaAlphabet);
    const bool q_prot = fits_alphabet(query, kProteinAlphabet);
    const bool s_prot = fits_alphabet(subject, kProteinAlphabet);
    if (!((q_dna && s_dna) || (q_prot && s_prot))) {
        throw SeqAlignError("smith_waterman: query and subject do not share an alphabet");
    }

    const std::size_t n = query.size(), m = subject.size();
    enum Move : unsigned char { kStop = 0, kDiag = 1, kUp = 2, kLeft = 3 };
    std::vector<int> H((n + 1) * (m + 1), 0);
    std::vector<unsigned char> trace((n + 1) * (m + 1), kStop);
    auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };

    int best = 0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const int sub = (query[i - 1] == subject[j - 1]) ? scoring.match : scoring.mismatch;
            const int diag = H[at(i - 1, j - 1)] + sub;
            const int up = H[at(i - 1, j)] + scoring.gap;    // gap in subject
            const int left = H[at(i, j - 1)] + scoring.gap;  // gap in query
            int v = 0;
            Move mv = kStop;
            // Tie order diag > up > left keeps traceback deterministic.
            if (diag > v) { v = diag; mv = kDiag; }
            if (up > v) { v = up; mv = kUp; }
            if (left > v) { v = left; mv = kLeft; }
            H[at(i, j)] = v;
            trace[at(i, j)] = mv;
            if (v > best) {  // strict: first best cell in row-major order wins
                best = v;
                bi = i;
                bj = j;
            }
        }
    }
    if (best <= 0) return std::nullopt;

    AlignmentHit hit;
    hit.score = best;
    std::size_t i = bi, j = bj;
    int columns = 0, matches = 0;
    while (trace[at(i, j)] != kStop) {
        switch (trace[at(i, j)]) {
            case kDiag:
                ++columns;
                if (query[i - 1] == subject[j - 1]) ++matches;
                --i;
                --j;
                break;
            case kUp:
                ++columns;
                --i;
                break;
            case kLeft:
                ++columns;
                --j;
                break;
            default:
                break;
        }
    }
    hit.aligned_len = columns;
    hit.matches = matches;
    hit.identity = columns > 0 ? static_cast<double>(matches) / columns : 0.0;
    hit.query_span = {i, bi};
    hit.subject_span = {j, bj};
    return hit;
}

bool shares_kmer(std::string_view a, std::string_view b, int k) {
    if (k <= 0) return true;
    const auto uk = static_cast<std::size_t>(k);
    if (a.size() < uk || b.size() < uk) return false;
    std::unordered_set<uint64_t> kmers;
    kmers.reserve(a.size());
    for (std::size_t i = 0; i + uk <= a.size(); ++i) {
        kmers.insert(fnv1a64(a.substr(i, uk)));
    }
    for (std::size_t i = 0; i + uk <= b.size(); ++i) {
        if (kmers.count(fnv1a64(b.substr(i, uk)))) return true;
    }
    return false;
}

BlastResult blast_scan(std::string_view text, const FastaDb& db,
                       const BlastThresholds& thresholds, const AlignScoring& scoring) {
    BlastResult out;
    if (db.records.empty()) return out;

    const SeqKind wanted = db.alphabet == DbAlphabet::dna ? SeqKind::dna : SeqKind::protein;
    std::vector<SeqRun> candidates;
    for (auto& run : extract_seq_runs(text, thresholds.min_len)) {
        if (run.kind == wanted) candidates.push_back(std::move(run));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const SeqRun& a, const SeqRun& b) { return a.start < b.start; });
    out.candidates = candidates.size();

    // Ties on score resolve by db record order, then candidate start.
    int best_score = 0;
    for (const auto& rec : db.records) {
        for (const auto& cand : candidates) {
            if (thresholds.use_seed_prefilter &&
                !shares_kmer(cand.residues, rec.sequence, thresholds.seed_len)) {
                ++out.pairs_skipped;
                continue;
            }
            ++out.pairs_aligned;
            auto hit = smith_waterman(cand.residues, rec.sequence, scoring);
            if (!hit) continue;
            if (hit->aligned_len >= thresholds.min_len &&
                hit->identity > out.best_identity_gated) {
                out.best_identity_gated = hit->identity;
                out.best_identity_db_id = rec.id;
            }
            const bool qualifies = hit->identity >= thresholds.identity &&
                                   hit->aligned_len >= thresholds.min_len;
            if (!qualifies) continue;
            hit->db_id = rec.id;
            // Alignment spans are relative to the extracted residue run.
            if (!out.fired || hit->score > best_score) {
                out.fired = true;
                best_score = hit->score;
                out.best = std::move(hit);
            }
        }
    }
    return out;
}

}  // namespace bioguard
