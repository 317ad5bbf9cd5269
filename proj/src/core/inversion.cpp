#include <algorithm>
#include <cmath>
#include <string>

#include "invbo/errors.hpp"
#include "invbo/inversion.hpp"

namespace invbo {

std::size_t levenshtein(std::span<const Token> a, std::span<const Token> b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double normalized_levenshtein(const TokenSequence& a, const TokenSequence& b) {
    const auto ca = a.content();
    const auto cb = b.content();
    const std::size_t longest = std::max(ca.size(), cb.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(levenshtein(ca, cb)) / static_cast<double>(longest);
}

InversionResult invert(const VaeParams& vae, const TokenSequence& x, const InversionOptions& options) {
    if (options.max_iters < 0) throw input_error("inversion needs a non-negative iteration budget");
    InversionResult best;
    Point z = encode(vae, x).mean;
    best.z_inv = z;
    best.final_distance = normalized_levenshtein(x, decode_argmax(vae, z));
    if (best.final_distance < options.eps) {
        best.converged = true;
        return best;
    }
    for (int t = 1; t <= options.max_iters; ++t) {
        const LatentGrad g = grad_wrt_latent(vae, z, x);
        for (std::size_t d = 0; d < z.size(); ++d) {
            if (!std::isfinite(g.grad[d])) {
                throw Error(ErrorKind::Inversion, "non-finite latent gradient at inversion step " + std::to_string(t));
            }
            z[d] -= options.lr * g.grad[d];
        }
        best.iterations_used = t;
        const double dist = normalized_levenshtein(x, decode_argmax(vae, z));
        if (dist < best.final_distance) {
            best.final_distance = dist;
            best.z_inv = z;
        }
        if (dist < options.eps) {
            best.converged = true;
            return best;
        }
    }
    return best;
}

Triplet recenter(const VaeParams& vae, const Triplet& triplet, MeteredOracle& oracle) {
    Triplet out;
    out.z = encode(vae, triplet.x).mean;
    out.x = decode_argmax(vae, out.z);
    out.y = oracle.evaluate(out.x);
    out.aligned = true;
    return out;
}

AlignMode parse_align_mode(std::string_view name) {
    if (name == "inversion") return AlignMode::Inversion;
    if (name == "recentering") return AlignMode::Recentering;
    if (name == "encoder_only") return AlignMode::EncoderOnly;
    throw config_error("unknown align mode '" + std::string(name) + "'");
}

std::string_view align_mode_name(AlignMode m) {
    switch (m) {
        case AlignMode::Inversion:
            return "inversion";
        case AlignMode::Recentering:
            return "recentering";
        case AlignMode::EncoderOnly:
            return "encoder_only";
    }
    return "?";
}

bool is_aligned(const VaeParams& vae, const Triplet& t) {
    return normalized_levenshtein(t.x, decode_argmax(vae, t.z)) == 0.0;
}

std::vector<Triplet> align_dataset(const VaeParams& vae, std::span<const Triplet> dataset, AlignMode mode,
                                   const InversionOptions& options, MeteredOracle* oracle) {
    if (mode == AlignMode::Recentering && oracle == nullptr) {
        throw input_error("recentering needs an oracle");
    }
    std::vector<Triplet> out;
    out.reserve(dataset.size());
    for (const Triplet& t : dataset) {
        switch (mode) {
            case AlignMode::Inversion: {
                Triplet n = t;
                const InversionResult r = invert(vae, t.x, options);
                n.z = r.z_inv;
                n.aligned = r.converged;
                out.push_back(std::move(n));
                break;
            }
            case AlignMode::Recentering:
                out.push_back(recenter(vae, t, *oracle));
                break;
            case AlignMode::EncoderOnly: {
                Triplet n = t;
                n.z = encode(vae, t.x).mean;
                n.aligned = is_aligned(vae, n);
                out.push_back(std::move(n));
                break;
            }
        }
    }
    return out;
}

}  // namespace invbo
