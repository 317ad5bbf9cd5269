#include <algorithm>
#include <charconv>
#include <sstream>

#include "invbo/errors.hpp"
#include "invbo/token_sequence.hpp"

namespace invbo {

TokenSequence::TokenSequence(std::vector<Token> tokens, std::size_t vocab_size) : tokens_(std::move(tokens)) {
    for (Token t : tokens_) {
        if (t >= vocab_size) throw input_error("token id " + std::to_string(t) + " outside vocabulary");
    }
}

TokenSequence TokenSequence::from_content(const std::vector<Token>& content, std::size_t max_len,
                                          std::size_t vocab_size) {
    if (content.size() > max_len) throw input_error("sequence longer than maximum length");
    std::vector<Token> tokens(max_len, kPadToken);
    std::copy(content.begin(), content.end(), tokens.begin());
    return TokenSequence(std::move(tokens), vocab_size);
}

std::size_t TokenSequence::length() const noexcept {
    const auto it = std::find(tokens_.begin(), tokens_.end(), kPadToken);
    return static_cast<std::size_t>(it - tokens_.begin());
}

std::vector<Token> TokenSequence::content() const {
    return std::vector<Token>(tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(length()));
}

std::string TokenSequence::content_key() const {
    const std::size_t n = length();
    return std::string(reinterpret_cast<const char*>(tokens_.data()), n);
}

TokenSequence parse_token_line(const std::string& line, std::size_t max_len, std::size_t vocab_size) {
    std::istringstream in(line);
    std::vector<Token> content;
    std::string word;
    while (in >> word) {
        long v = -1;
        const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
        if (ec != std::errc() || ptr != word.data() + word.size()) throw input_error("malformed token '" + word + "'");
        if (v < 0 || static_cast<std::size_t>(v) >= vocab_size) {
            throw input_error("token id " + std::to_string(v) + " outside vocabulary");
        }
        if (v == kPadToken) break;
        content.push_back(static_cast<Token>(v));
    }
    return TokenSequence::from_content(content, max_len, vocab_size);
}

std::string format_tokens(const TokenSequence& seq) {
    std::ostringstream out;
    const auto content = seq.content();
    for (std::size_t i = 0; i < content.size(); ++i) {
        if (i) out << ' ';
        out << static_cast<int>(content[i]);
    }
    return out.str();
}

}  // namespace invbo
