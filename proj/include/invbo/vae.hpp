#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "invbo/gp.hpp"
#include "invbo/rng.hpp"
#include "invbo/token_sequence.hpp"

namespace invbo {

struct VaeDims {
    std::size_t vocab = 16;
    std::size_t max_len = 16;
    std::size_t latent = 8;
    std::size_t hidden = 128;

    std::size_t param_count() const;
    void validate() const;
    bool operator==(const VaeDims&) const = default;
};

/// Offsets of each tensor inside the flat parameter vector. Matrices are row-major
/// (out x in).
struct VaeLayout {
    std::size_t emb, w1, b1, wmu, bmu, wlv, blv, wd1, bd1, wd2, bd2, total;
    explicit VaeLayout(const VaeDims& d);
};

/// Encoder: position-aware token embedding, mean-pooled over positions, one
/// tanh layer, then linear mean and log-variance heads.
/// Decoder: one tanh layer, then a linear layer emitting max_len x vocab logits.
struct VaeParams {
    VaeDims dims;
    std::vector<double> values;

    static VaeParams zeros(const VaeDims& dims);
    /// Uniform in +-1/sqrt(fan_in) for weights; zero biases.
    static VaeParams random(const VaeDims& dims, Rng& rng);

    bool operator==(const VaeParams&) const = default;
};

struct EncoderOutput {
    Point mean;
    Point logvar;
};

EncoderOutput encode(const VaeParams& params, const TokenSequence& x);

/// Logits laid out position-major: logits[p * vocab + v].
std::vector<double> decode_logits(const VaeParams& params, std::span<const double> z);

/// Per-position argmax, ties to the lowest token id.
TokenSequence argmax_tokens(std::span<const double> logits, const VaeDims& dims);
TokenSequence decode_argmax(const VaeParams& params, std::span<const double> z);

/// Mean per-position cross-entropy of the logits against the target tokens
/// (pad positions included).
double reconstruction_loss(std::span<const double> logits, const TokenSequence& target, const VaeDims& dims);

/// KL(N(mean, exp(logvar)) || N(0, I)).
double kl_standard_normal(std::span<const double> mean, std::span<const double> logvar);

struct LatentGrad {
    double loss = 0.0;
    Point grad;
};

/// Gradient of reconstruction_loss(decode_logits(z), target) with respect to z; decoder frozen.
LatentGrad grad_wrt_latent(const VaeParams& params, std::span<const double> z, const TokenSequence& target);

/// Adds J^T [dmean; dlogvar] of the encoder to grad (parameter-sized).
void encoder_backward(const VaeParams& params, const TokenSequence& x, std::span<const double> dmean,
                      std::span<const double> dlogvar, std::span<double> grad);

/// Reconstruction loss at z plus, when grad is non-empty, its gradient with
/// respect to the decoder parameters (accumulated into grad) and z.
double decoder_loss_backward(const VaeParams& params, std::span<const double> z, const TokenSequence& target,
                             std::span<double> grad, std::span<double> grad_z);

/// One reparameterized ELBO sample with fixed noise eps:
/// CE(decode(mean + exp(logvar/2) * eps), x) + kl_weight * KL. Gradient
/// accumulated into grad when non-empty.
double elbo_sample_loss(const VaeParams& params, const TokenSequence& x, std::span<const double> eps,
                        double kl_weight, std::span<double> grad);

/// Deterministic corpus objective evaluated at the encoder mean.
double corpus_loss(const VaeParams& params, std::span<const TokenSequence> corpus, double kl_weight);

struct VaeTrainOptions {
    int epochs = 100;
    double lr = 0.5;
    double kl_weight = 0.1;
    std::size_t batch_size = 16;
};

struct VaeTrainReport {
    double loss_before = 0.0;
    double loss_after = 0.0;
    int best_epoch = 0;
};

/// Minibatch gradient descent (no momentum) on the reparameterized ELBO. The
/// returned parameters are the best epoch-end snapshot under corpus_loss, so
/// the corpus loss never increases.
VaeParams train_vae(const VaeParams& init, std::span<const TokenSequence> corpus, const VaeTrainOptions& options,
                    Rng& rng, VaeTrainReport* report = nullptr);

/// Text checkpoint: "invbo-vae 1", one "key value" line per dimension, a
/// "params N" line, then N values in round-trip precision.
void save_checkpoint(const VaeParams& params, const std::filesystem::path& path);
VaeParams load_checkpoint(const std::filesystem::path& path);

}  // namespace invbo
