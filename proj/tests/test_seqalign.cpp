#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "bioguard/seqalign.hpp"

using namespace bioguard;
namespace fs = std::filesystem;

namespace {

// Independent score-only local-alignment oracle: same recurrence written
// as a plain max over a full table, no traceback, no shared code.
int sw_score_oracle(std::string_view q, std::string_view s, const AlignScoring& sc = {}) {
    const std::size_t n = q.size(), m = s.size();
    std::vector<std::vector<int>> h(n + 1, std::vector<int>(m + 1, 0));
    int best = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            int v = h[i - 1][j - 1] + (q[i - 1] == s[j - 1] ? sc.match : sc.mismatch);
            v = std::max(v, h[i - 1][j] + sc.gap);
            v = std::max(v, h[i][j - 1] + sc.gap);
            v = std::max(v, 0);
            h[i][j] = v;
            best = std::max(best, v);
        }
    }
    return best;
}

std::string random_dna(std::mt19937_64& rng, std::size_t len) {
    static const char bases[] = "ACGT";
    std::uniform_int_distribution<int> pick(0, 3);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) out.push_back(bases[pick(rng)]);
    return out;
}

char other_base(char c) { return c == 'A' ? 'C' : 'A'; }

fs::path write_fasta(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / ("bioguard_" + name + ".fasta");
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_CASE("fasta parsing") {
    SUBCASE("sequence lines concatenate") {
        const FastaDb db = parse_fasta(write_fasta("concat", ">a\nACGT\nACGT\n"));
        REQUIRE(db.records.size() == 1);
        CHECK(db.records[0].id == "a");
        CHECK(db.records[0].sequence == "ACGTACGT");
        CHECK(db.alphabet == DbAlphabet::dna);
    }
    SUBCASE("lowercase and whitespace are cleaned up") {
        const FastaDb db = parse_fasta(write_fasta("clean", ">a desc here\nac gt\nACGT\n"));
        CHECK(db.records[0].sequence == "ACGTACGT");
        CHECK(db.records[0].description == "desc here");
    }
    SUBCASE("empty record is an error") {
        CHECK_THROWS_AS(parse_fasta(write_fasta("empty_rec", ">a\n\n>b\nAC\n")), SeqAlignError);
    }
    SUBCASE("duplicate ids are an error") {
        CHECK_THROWS_AS(parse_fasta(write_fasta("dup", ">a\nAC\n>a\nGT\n")), SeqAlignError);
    }
    SUBCASE("data before a header is an error with a line number") {
        CHECK_THROWS_WITH_AS(parse_fasta(write_fasta("headerless", "ACGT\n>a\nAC\n")),
                             doctest::Contains("line 1"), SeqAlignError);
    }
    SUBCASE("empty file is an error") {
        CHECK_THROWS_AS(parse_fasta(write_fasta("void", "")), SeqAlignError);
    }
    SUBCASE("protein residues switch the alphabet") {
        const FastaDb db = parse_fasta(write_fasta("prot", ">p\nMKVLAW\n"));
        CHECK(db.alphabet == DbAlphabet::protein);
    }
}

TEST_CASE("smith-waterman hand cases") {
    std::mt19937_64 rng(2024);
    const std::string subject = random_dna(rng, 300);
    const std::string query = subject.substr(100, 60);

    SUBCASE("perfect substring") {
        const auto hit = smith_waterman(query, subject);
        REQUIRE(hit);
        CHECK(hit->identity == doctest::Approx(1.0));
        CHECK(hit->aligned_len == 60);
        CHECK(hit->score == 120);
        CHECK(hit->subject_span.first == 100);
        CHECK(hit->subject_span.second == 160);
    }
    SUBCASE("six interior scattered mismatches keep a gapless alignment") {
        std::string mutated = query;
        for (std::size_t at : {5u, 15u, 25u, 35u, 45u, 55u}) {
            mutated[at] = other_base(mutated[at]);
        }
        const auto hit = smith_waterman(mutated, subject);
        REQUIRE(hit);
        CHECK(hit->aligned_len == 60);
        CHECK(hit->matches == 54);
        CHECK(hit->identity == doctest::Approx(54.0 / 60.0));
        CHECK(hit->score == 54 * 2 - 6);
        CHECK(hit->score == sw_score_oracle(mutated, subject));
    }
    SUBCASE("no common residue reports no hit") {
        CHECK_FALSE(smith_waterman("AAAA", "CCCC").has_value());
    }
    SUBCASE("alphabet mismatch is an error") {
        CHECK_THROWS_AS(smith_waterman("ACGU", "MKWF"), SeqAlignError);
    }
}

TEST_CASE("smith-waterman agrees with the score oracle on random pairs") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 200; ++i) {
        const std::string q = random_dna(rng, 20 + rng() % 60);
        const std::string s = random_dna(rng, 20 + rng() % 120);
        const auto hit = smith_waterman(q, s);
        const int expected = sw_score_oracle(q, s);
        if (expected <= 0) {
            CHECK_FALSE(hit.has_value());
        } else {
            REQUIRE(hit);
            CHECK(hit->score == expected);
            // Traceback consistency: identity * columns = matches.
            CHECK(hit->matches == doctest::Approx(hit->identity * hit->aligned_len));
            CHECK(hit->aligned_len >= 1);
            CHECK(hit->identity >= 0.0);
            CHECK(hit->identity <= 1.0);
            // Spans lie inside their sequences.
            CHECK(hit->query_span.first < hit->query_span.second);
            CHECK(hit->query_span.second <= q.size());
            CHECK(hit->subject_span.first < hit->subject_span.second);
            CHECK(hit->subject_span.second <= s.size());
        }
        // Score symmetry under the symmetric scheme.
        const auto flipped = smith_waterman(s, q);
        CHECK((hit ? hit->score : 0) == (flipped ? flipped->score : 0));
    }
}

TEST_CASE("seed prefilter cannot miss a qualifying hit") {
    // Worst case at the 0.88 x 60 gate: one mismatch every 8th column
    // leaves 7-long exact runs. A 7-mer filter keeps the pair; an 11-mer
    // filter would drop it.
    std::mt19937_64 rng(31);
    const std::string subject = random_dna(rng, 60);
    std::string query = subject;
    for (std::size_t at = 7; at < 60; at += 8) {
        query[at] = other_base(query[at]);
    }
    const auto hit = smith_waterman(query, subject);
    REQUIRE(hit);
    CHECK(hit->aligned_len == 60);
    CHECK(hit->identity >= 0.88);
    CHECK(shares_kmer(query, subject, 7));
    CHECK_FALSE(shares_kmer(query, subject, 11));
}

TEST_CASE("blast scan gates") {
    std::mt19937_64 rng(5150);
    const std::string base = random_dna(rng, 200);
    const fs::path db_path = write_fasta("scan_db", ">rec1 demo\n" + base + "\n");
    const FastaDb db = parse_fasta(db_path);
    const std::string fragment = base.substr(50, 60);

    SUBCASE("verbatim 60-char db subsequence fires") {
        const BlastResult r = blast_scan("preamble " + fragment + " postamble", db);
        CHECK(r.fired);
        REQUIRE(r.best);
        CHECK(r.best->identity == doctest::Approx(1.0));
        CHECK(r.best->db_id == "rec1");
    }
    SUBCASE("eight substitutions land under the identity gate") {
        std::string mutated = fragment;
        for (std::size_t at : {3u, 11u, 19u, 27u, 35u, 43u, 51u, 57u}) {
            mutated[at] = other_base(mutated[at]);
        }
        // 52/60 = 0.8667 < 0.88; the DP oracle confirms no qualifying
        // sub-alignment clears both gates.
        const auto hit = smith_waterman(mutated, base);
        REQUIRE(hit);
        CHECK(hit->identity < 0.88);
        const BlastResult r = blast_scan("x " + mutated + " y", db);
        CHECK_FALSE(r.fired);
        CHECK_FALSE(r.best.has_value());
    }
    SUBCASE("a 59-char perfect match fails the length gate") {
        // 59 residues never reach candidate extraction (min 60).
        const BlastResult r = blast_scan("x " + base.substr(50, 59) + " y", db);
        CHECK_FALSE(r.fired);
    }
    SUBCASE("empty text and empty-ish db") {
        CHECK_FALSE(blast_scan("no sequences here", db).fired);
        const FastaDb none;
        CHECK_FALSE(blast_scan(fragment, none).fired);
    }
}

TEST_CASE("seeded and exhaustive blast scans agree") {
    std::mt19937_64 rng(4242);
    const std::string base = random_dna(rng, 400);
    const FastaDb db = parse_fasta(write_fasta("agree_db", ">r demo\n" + base + "\n"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        std::string text;
        if (i % 3 == 0) {
            text = "unrelated " + random_dna(rng, 80);
        } else {
            std::string frag = base.substr(rng() % 300, 60 + rng() % 40);
            const int edits = static_cast<int>(rng() % 12);
            for (int e = 0; e < edits; ++e) {
                const auto at = rng() % frag.size();
                frag[at] = other_base(frag[at]);
            }
            text = "payload " + frag + " tail";
        }
        BlastThresholds seeded;
        BlastThresholds exhaustive;
        exhaustive.use_seed_prefilter = false;
        const BlastResult a = blast_scan(text, db, seeded);
        const BlastResult b = blast_scan(text, db, exhaustive);
        CHECK(a.fired == b.fired);
        REQUIRE(a.best.has_value() == b.best.has_value());
        if (a.best) {
            CHECK(a.best->score == b.best->score);
            CHECK(a.best->identity == b.best->identity);
            CHECK(a.best->aligned_len == b.best->aligned_len);
        }
    }
}
