#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bioguard {

// Canonical folded view of a text plus the offset map back into the
// original bytes. All lexical signals (keyword, fuzzy, semantic) and the
// mock model's intent check operate on `folded`; hit offsets are reported
// against `original` through the span map.
//
// Folding, per code point:
//   1. compatibility subset: fullwidth ASCII forms -> ASCII, NBSP and
//      ideographic space -> space, zero-width characters dropped
//   2. ASCII case fold
//   3. homoglyph map (see homoglyph_fold)
//   4. whitespace runs collapsed to a single space, ends trimmed
//
// Folding is idempotent: every byte it emits is a fixed point of the
// chain above.
struct NormalizedText {
    struct SourceSpan {
        uint32_t begin = 0;  // byte offsets into `original`
        uint32_t end = 0;
    };

    std::string original;
    std::string folded;
    // span_map[i] is the original-byte range that produced folded byte i.
    // Monotone non-decreasing; covers every folded offset.
    std::vector<SourceSpan> span_map;

    // Original byte range for folded range [begin, end). `end` exclusive,
    // end > begin required.
    std::pair<std::size_t, std::size_t> original_span(std::size_t begin, std::size_t end) const;
};

NormalizedText normalize(std::string_view text);

// The homoglyph table applied inside normalize(): '@'->a '0'->o '1'->l
// '3'->e '5'->s '$'->s plus the common Cyrillic look-alikes
// (а е о с р х у, both cases) mapped to their Latin forms. Returns 0 when
// cp has no mapping. Exposed so the red-team homoglyph mutator and tests
// stay in sync with the guard.
char32_t homoglyph_fold(char32_t cp);

}  // namespace bioguard
