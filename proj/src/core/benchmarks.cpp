#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "invbo/benchmarks.hpp"
#include "invbo/inversion.hpp"

#ifndef INVBO_DEFAULT_DATA_DIR
#define INVBO_DEFAULT_DATA_DIR "data"
#endif

namespace invbo {

namespace {
std::atomic<std::uint64_t> g_oracle_calls{0};
}

std::uint64_t oracle_calls_total() { return g_oracle_calls.load(); }
void note_oracle_call() { g_oracle_calls.fetch_add(1); }

double ackley(std::span<const double> x) {
    if (x.empty()) throw input_error("ackley needs at least one coordinate");
    double sq = 0.0, cs = 0.0;
    for (double v : x) {
        if (!(v >= -kAckleyBound && v <= kAckleyBound)) throw input_error("ackley input outside [-32.768, 32.768]");
        sq += v * v;
        cs += std::cos(2.0 * std::numbers::pi * v);
    }
    const double n = static_cast<double>(x.size());
    return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
}

double target_string_task(const TokenSequence& x, const TokenSequence& target) {
    return 1.0 - normalized_levenshtein(x, target);
}

bool evaluate_expression(std::span<const Token> content, double x, double& value) {
    using namespace expr_tokens;
    std::size_t i = 0;
    auto operand = [&](double& out) {
        if (i >= content.size()) return false;
        if (content[i] == kVar) {
            out = x;
            ++i;
            return true;
        }
        if (content[i] < kDigit0 || content[i] > kDigit0 + 9) return false;
        out = 0.0;
        while (i < content.size() && content[i] >= kDigit0 && content[i] <= kDigit0 + 9) {
            out = 10.0 * out + static_cast<double>(content[i] - kDigit0);
            ++i;
        }
        return true;
    };
    double acc = 0.0;
    if (!operand(acc)) return false;
    while (i < content.size()) {
        const Token op = content[i++];
        if (op != kPlus && op != kMinus && op != kTimes) return false;
        double rhs = 0.0;
        if (!operand(rhs)) return false;
        acc = op == kPlus ? acc + rhs : op == kMinus ? acc - rhs : acc * rhs;
    }
    value = acc;
    return true;
}

std::vector<Token> expression_target_tokens() {
    using namespace expr_tokens;
    return {kVar, kTimes, kVar, kMinus, static_cast<Token>(kDigit0 + 3), kTimes, kVar, kPlus,
            static_cast<Token>(kDigit0 + 2)};
}

double micro_expression_task(const TokenSequence& x) {
    static const std::vector<Token> target = expression_target_tokens();
    const auto content = x.content();
    double mse = 0.0;
    for (int i = 0; i < 32; ++i) {
        const double t = -2.0 + 4.0 * i / 31.0;
        double got = 0.0, want = 0.0;
        if (!evaluate_expression(content, t, got)) return kExpressionFloor;
        evaluate_expression(target, t, want);
        mse += (got - want) * (got - want);
    }
    mse /= 32.0;
    if (!std::isfinite(mse)) return kExpressionFloor;
    return std::max(-std::log1p(mse), kExpressionFloor);
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("INVBO_DATA_DIR")) return env;
    return INVBO_DEFAULT_DATA_DIR;
}

std::vector<TokenSequence> load_corpus(const std::filesystem::path& path, std::size_t max_len, std::size_t vocab) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read corpus " + path.string());
    std::vector<TokenSequence> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        try {
            out.push_back(parse_token_line(line, max_len, vocab));
        } catch (const Error& e) {
            throw io_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (out.empty()) throw io_error("corpus " + path.string() + " is empty");
    return out;
}

TokenSequence target_string_target(std::size_t max_len, std::size_t vocab) {
    // Held out of the shipped corpus (see tools/make_corpus.py).
    static const std::vector<Token> content{6, 2, 4, 4, 5, 14, 7, 9, 14, 15, 2, 4};
    return TokenSequence::from_content(content, max_len, vocab);
}

DiscreteTask make_task(const std::string& id, const std::filesystem::path& corpus_path, std::size_t max_len,
                       std::size_t vocab) {
    DiscreteTask task;
    task.id = id;
    task.max_len = max_len;
    task.vocab = vocab;
    if (id == "target_string") {
        if (vocab < 16) throw config_error("target_string needs a vocabulary of at least 16 tokens");
        const TokenSequence target = target_string_target(max_len, vocab);
        task.score = [target](const TokenSequence& x) { return target_string_task(x, target); };
    } else if (id == "micro_expression") {
        if (vocab < 15) throw config_error("micro_expression needs a vocabulary of at least 15 tokens");
        task.score = micro_expression_task;
    } else {
        throw config_error("unknown task '" + id + "'");
    }
    const auto path = corpus_path.empty() ? data_dir() / (id + ".tokens") : corpus_path;
    task.corpus = load_corpus(path, max_len, vocab);
    return task;
}

}  // namespace invbo
