#pragma once

#include <string>
#include <vector>

namespace prefdetect {

// Splits on maximal runs of Unicode whitespace (ASCII whitespace plus the
// common UTF-8 space code points). Never produces empty tokens; punctuation
// stays attached to its word.
std::vector<std::string> split_words(const std::string& text);

// Splits after '.', '!' or '?' when followed by whitespace or end of text.
// Terminal punctuation stays attached. Text without a terminator comes back
// as a single sentence. Abbreviation mis-splits are accepted behavior.
std::vector<std::string> split_sentences(const std::string& text);

std::string join_words(const std::vector<std::string>& words);

} // namespace prefdetect
