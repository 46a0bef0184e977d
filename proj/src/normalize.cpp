#include "bioguard/normalize.hpp"

#include <cassert>

namespace bioguard {

namespace {

// Decodes one UTF-8 code point at `pos`. Malformed bytes are passed
// through as single-byte code points so folding stays total.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& width) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    width = 1;
    if (b0 < 0x80) return b0;
    std::size_t need = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        cp = b0 & 0x07;
    } else {
        return b0;  // stray continuation byte
    }
    if (pos + need >= s.size()) {
        return b0;  // truncated sequence
    }
    for (std::size_t i = 1; i <= need; ++i) {
        const auto bi = static_cast<unsigned char>(s[pos + i]);
        if ((bi & 0xC0) != 0x80) return b0;
        cp = (cp << 6) | (bi & 0x3F);
    }
    width = need + 1;
    return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_whitespace_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v' || cp == 0x00A0 || cp == 0x3000;
}

bool is_zero_width(char32_t cp) {
    return (cp >= 0x200B && cp <= 0x200D) || cp == 0xFEFF || cp == 0x00AD;
}

}  // namespace

char32_t homoglyph_fold(char32_t cp) {
    switch (cp) {
        case U'@': return U'a';
        case U'0': return U'o';
        case U'1': return U'l';
        case U'3': return U'e';
        case U'5': return U's';
        case U'$': return U's';
        // Cyrillic look-alikes, lowercase then uppercase.
        case 0x0430: return U'a';  // а
        case 0x0435: return U'e';  // е
        case 0x043E: return U'o';  // о
        case 0x0441: return U'c';  // с
        case 0x0440: return U'p';  // р
        case 0x0445: return U'x';  // х
        case 0x0443: return U'y';  // у
        case 0x0410: return U'a';  // А
        case 0x0415: return U'e';  // Е
        case 0x041E: return U'o';  // О
        case 0x0421: return U'c';  // С
        case 0x0420: return U'p';  // Р
        case 0x0425: return U'x';  // Х
        case 0x0423: return U'y';  // У
        default: return 0;
    }
}

NormalizedText normalize(std::string_view text) {
    NormalizedText out;
    out.original.assign(text);
    out.folded.reserve(text.size());
    out.span_map.reserve(text.size());

    bool pending_space = false;
    uint32_t ws_begin = 0, ws_end = 0;
    bool emitted_any = false;

    auto emit = [&](char32_t cp, uint32_t src_begin, uint32_t src_end) {
        if (pending_space) {
            if (emitted_any) {
                // A space is emitted only between two non-space code
                // points; leading/trailing runs are trimmed.
                out.folded.push_back(' ');
                out.span_map.push_back({ws_begin, ws_end});
            }
            pending_space = false;
        }
        const std::size_t before = out.folded.size();
        encode_utf8(cp, out.folded);
        for (std::size_t i = before; i < out.folded.size(); ++i) {
            out.span_map.push_back({src_begin, src_end});
        }
        emitted_any = true;
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t width = 1;
        char32_t cp = decode_utf8(text, pos, width);
        const auto src_begin = static_cast<uint32_t>(pos);
        const auto src_end = static_cast<uint32_t>(pos + width);
        pos += width;

        if (is_zero_width(cp)) continue;
        // Fullwidth ASCII block -> ASCII.
        if (cp >= 0xFF01 && cp <= 0xFF5E) cp = cp - 0xFEE0;
        if (is_whitespace_cp(cp)) {
            if (!pending_space) ws_begin = src_begin;
            ws_end = src_end;
            pending_space = true;
            continue;
        }
        if (cp >= U'A' && cp <= U'Z') cp = cp - U'A' + U'a';
        if (char32_t mapped = homoglyph_fold(cp)) cp = mapped;
        emit(cp, src_begin, src_end);
    }

    assert(out.folded.size() == out.span_map.size());
    return out;
}

std::pair<std::size_t, std::size_t> NormalizedText::original_span(std::size_t begin,
                                                                  std::size_t end) const {
    assert(begin < end && end <= span_map.size());
    return {span_map[begin].begin, span_map[end - 1].end};
}

}  // namespace bioguard
