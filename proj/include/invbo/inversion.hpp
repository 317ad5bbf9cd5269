#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "invbo/benchmarks.hpp"
#include "invbo/token_sequence.hpp"
#include "invbo/vae.hpp"

namespace invbo {

/// One evaluated point: sequence, latent code, score, and whether the
/// decoder maps the code back to the sequence.
struct Triplet {
    TokenSequence x;
    Point z;
    double y = 0.0;
    bool aligned = false;
};

/// Edit distance (unit insert/delete/substitute) between the unpadded
/// contents divided by the longer content length; 0 when both are empty.
double normalized_levenshtein(const TokenSequence& a, const TokenSequence& b);
std::size_t levenshtein(std::span<const Token> a, std::span<const Token> b);

struct InversionOptions {
    int max_iters = 1000;
    double lr = 0.1;
    double eps = 1e-9;
};

struct InversionResult {
    Point z_inv;
    double final_distance = 1.0;
    int iterations_used = 0;
    bool converged = false;
};

/// Gradient descent on the reconstruction loss from the encoder mean until the
/// decoded sequence is within eps of x. Returns the first converged iterate,
/// otherwise the iterate with the smallest distance seen. Never touches an
/// oracle.
InversionResult invert(const VaeParams& vae, const TokenSequence& x, const InversionOptions& options = {});

/// Re-decodes the encoder mean of triplet.x and scores the result: exactly one oracle call.
Triplet recenter(const VaeParams& vae, const Triplet& triplet, MeteredOracle& oracle);

enum class AlignMode { Inversion, Recentering, EncoderOnly };
AlignMode parse_align_mode(std::string_view name);
std::string_view align_mode_name(AlignMode m);

/// Recomputes the aligned flag of a triplet under the current decoder.
bool is_aligned(const VaeParams& vae, const Triplet& t);

/// Rebuilds the latent codes of a dataset. Inversion keeps x and y and sets
/// aligned = converged; recentering replaces each triplet (one oracle call
/// each; oracle required); encoder-only uses the encoder mean.
std::vector<Triplet> align_dataset(const VaeParams& vae, std::span<const Triplet> dataset, AlignMode mode,
                                   const InversionOptions& options, MeteredOracle* oracle);

}  // namespace invbo
