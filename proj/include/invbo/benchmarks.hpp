#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "invbo/errors.hpp"
#include "invbo/gp.hpp"
#include "invbo/token_sequence.hpp"

namespace invbo {

/// Process-wide count of black-box evaluations across every metered oracle.
std::uint64_t oracle_calls_total();
void note_oracle_call();

/// Budgeted black-box objective. Every evaluation increments the local and the
/// process-wide counters once and is logged before the value is returned; an
/// evaluation past the budget raises before the function runs.
template <class Input>
class Metered {
public:
    using Fn = std::function<double(const Input&)>;

    Metered(std::string task_id, Fn fn, std::size_t budget)
        : task_id_(std::move(task_id)), fn_(std::move(fn)), budget_(budget) {}

    double evaluate(const Input& x) {
        if (calls_ >= budget_) {
            throw budget_error("oracle budget of " + std::to_string(budget_) + " exhausted for task " + task_id_);
        }
        const double y = fn_(x);
        ++calls_;
        note_oracle_call();
        log_.push_back(y);
        return y;
    }

    const std::string& task_id() const noexcept { return task_id_; }
    std::size_t calls() const noexcept { return calls_; }
    std::size_t budget() const noexcept { return budget_; }
    std::size_t remaining() const noexcept { return budget_ - calls_; }
    const std::vector<double>& log() const noexcept { return log_; }
    /// Unmetered access for diagnostics that study the objective itself.
    double peek(const Input& x) const { return fn_(x); }

private:
    std::string task_id_;
    Fn fn_;
    std::size_t budget_;
    std::size_t calls_ = 0;
    std::vector<double> log_;
};

using MeteredOracle = Metered<TokenSequence>;
using MeteredContinuous = Metered<Point>;

inline constexpr double kAckleyBound = 32.768;

/// Ackley function (minimization), defined on [-32.768, 32.768]^d.
double ackley(std::span<const double> x);

/// 1 - normalized Levenshtein distance to the target.
double target_string_task(const TokenSequence& x, const TokenSequence& target);

/// Token alphabet of the expression task: 0 pad, 1..10 digits 0..9, 11 '+', 12 '-', 13 '*', 14 'x'.
namespace expr_tokens {
inline constexpr Token kDigit0 = 1;
inline constexpr Token kPlus = 11;
inline constexpr Token kMinus = 12;
inline constexpr Token kTimes = 13;
inline constexpr Token kVar = 14;
}  // namespace expr_tokens

inline constexpr double kExpressionFloor = -30.0;

/// Evaluates the expression at x strictly left to right (no precedence).
/// Grammar: operand (op operand)*, operand = digits | 'x'. Returns false when
/// the tokens do not parse.
bool evaluate_expression(std::span<const Token> content, double x, double& value);

/// The fixed target x*x-3*x+2, read left to right: ((x*x - 3) * x) + 2.
std::vector<Token> expression_target_tokens();

/// -log(1 + MSE) against the target over 32 grid points in [-2, 2];
/// unparseable or non-finite expressions score kExpressionFloor, and the score
/// never falls below it.
double micro_expression_task(const TokenSequence& x);

/// Discrete task resolved from its registry id.
struct DiscreteTask {
    std::string id;
    std::size_t vocab = 16;
    std::size_t max_len = 16;
    std::function<double(const TokenSequence&)> score;
    std::vector<TokenSequence> corpus;
};

/// Known ids: "target_string", "micro_expression". An empty corpus path
/// selects the corpus shipped in the data directory.
DiscreteTask make_task(const std::string& id, const std::filesystem::path& corpus_path = {},
                       std::size_t max_len = 16, std::size_t vocab = 16);

/// Default data directory (compiled in; INVBO_DATA_DIR overrides).
std::filesystem::path data_dir();

std::vector<TokenSequence> load_corpus(const std::filesystem::path& path, std::size_t max_len, std::size_t vocab);

/// Target of the target_string task.
TokenSequence target_string_target(std::size_t max_len = 16, std::size_t vocab = 16);

}  // namespace invbo
