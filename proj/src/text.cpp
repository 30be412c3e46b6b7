#include "prefdetect/text.hpp"

#include <cstdint>

namespace prefdetect {

namespace {

// Byte length of the whitespace character starting at i, or 0 if none.
size_t ws_len(const std::string& s, size_t i) {
    const unsigned char c0 = static_cast<unsigned char>(s[i]);
    if (c0 == ' ' || (c0 >= 0x09 && c0 <= 0x0d)) return 1;
    const size_t n = s.size();
    auto b = [&](size_t k) { return static_cast<unsigned char>(s[i + k]); };
    if (c0 == 0xc2 && i + 1 < n) {
        if (b(1) == 0xa0 || b(1) == 0x85) return 2; // NBSP, NEL
    }
    if (c0 == 0xe1 && i + 2 < n && b(1) == 0x9a && b(2) == 0x80) return 3; // ogham
    if (c0 == 0xe2 && i + 2 < n) {
        if (b(1) == 0x80) {
            const unsigned char c2 = b(2);
            if ((c2 >= 0x80 && c2 <= 0x8a) || c2 == 0xa8 || c2 == 0xa9 || c2 == 0xaf)
                return 3; // en/em family, line/para separators, narrow NBSP
        }
        if (b(1) == 0x81 && b(2) == 0x9f) return 3; // math space
    }
    if (c0 == 0xe3 && i + 2 < n && b(1) == 0x80 && b(2) == 0x80) return 3; // ideographic
    return 0;
}

} // namespace

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        size_t w = ws_len(text, i);
        if (w > 0) {
            i += w;
            continue;
        }
        size_t start = i;
        while (i < n && ws_len(text, i) == 0) ++i;
        out.emplace_back(text, start, i - start);
    }
    return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    const size_t n = text.size();
    size_t i = 0;
    // skip leading whitespace
    while (i < n) {
        size_t w = ws_len(text, i);
        if (w == 0) break;
        i += w;
    }
    size_t start = i;
    size_t last_nonspace = i; // one past the last non-whitespace byte seen
    while (i < n) {
        size_t w = ws_len(text, i);
        if (w > 0) {
            i += w;
            continue;
        }
        char c = text[i];
        ++i;
        last_nonspace = i;
        if (c == '.' || c == '!' || c == '?') {
            bool boundary = i >= n || ws_len(text, i) > 0;
            if (boundary) {
                out.emplace_back(text, start, i - start);
                while (i < n) {
                    size_t w2 = ws_len(text, i);
                    if (w2 == 0) break;
                    i += w2;
                }
                start = i;
                last_nonspace = i;
            }
        }
    }
    if (last_nonspace > start) out.emplace_back(text, start, last_nonspace - start);
    return out;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

} // namespace prefdetect
