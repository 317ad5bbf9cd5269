#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace invbo {

using Token = std::uint8_t;
inline constexpr Token kPadToken = 0;

/// Fixed-length token sequence padded with kPadToken. The content of a
/// sequence is its prefix before the first pad; anything after the first pad
/// is ignored by comparisons and scoring.
class TokenSequence {
public:
    TokenSequence() = default;
    TokenSequence(std::vector<Token> tokens, std::size_t vocab_size);

    /// Builds a padded sequence of length max_len from unpadded content.
    static TokenSequence from_content(const std::vector<Token>& content, std::size_t max_len,
                                      std::size_t vocab_size);

    const std::vector<Token>& tokens() const noexcept { return tokens_; }
    std::size_t max_length() const noexcept { return tokens_.size(); }
    std::size_t length() const noexcept;
    std::vector<Token> content() const;
    std::string content_key() const;

    Token operator[](std::size_t i) const { return tokens_[i]; }
    bool operator==(const TokenSequence& other) const = default;

private:
    std::vector<Token> tokens_;
};

/// Whitespace-separated token ids, one sequence per line; missing positions are padded.
TokenSequence parse_token_line(const std::string& line, std::size_t max_len, std::size_t vocab_size);
std::string format_tokens(const TokenSequence& seq);

}  // namespace invbo
