#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "invbo/errors.hpp"
#include "invbo/simd.hpp"
#include "invbo/vae.hpp"

namespace invbo {

std::size_t VaeDims::param_count() const { return VaeLayout(*this).total; }

void VaeDims::validate() const {
    if (vocab < 2 || vocab > 256) throw config_error("vae vocabulary must be in [2, 256]");
    if (max_len == 0 || latent == 0 || hidden == 0) throw config_error("vae dimensions must be positive");
}

VaeLayout::VaeLayout(const VaeDims& d) {
    std::size_t off = 0;
    auto take = [&off](std::size_t n) {
        const std::size_t at = off;
        off += n;
        return at;
    };
    const std::size_t out = d.max_len * d.vocab;
    emb = take(out * d.hidden);
    w1 = take(d.hidden * d.hidden);
    b1 = take(d.hidden);
    wmu = take(d.latent * d.hidden);
    bmu = take(d.latent);
    wlv = take(d.latent * d.hidden);
    blv = take(d.latent);
    wd1 = take(d.hidden * d.latent);
    bd1 = take(d.hidden);
    wd2 = take(out * d.hidden);
    bd2 = take(out);
    total = off;
}

VaeParams VaeParams::zeros(const VaeDims& dims) {
    dims.validate();
    return VaeParams{dims, std::vector<double>(dims.param_count(), 0.0)};
}

VaeParams VaeParams::random(const VaeDims& dims, Rng& rng) {
    VaeParams p = zeros(dims);
    const VaeLayout l(dims);
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) p.values[offset + i] = bound * (2.0 * uniform01(rng) - 1.0);
    };
    const std::size_t out = dims.max_len * dims.vocab;
    // each embedding row enters the pool once per position
    fill(l.emb, out * dims.hidden, 1);
    fill(l.w1, dims.hidden * dims.hidden, dims.hidden);
    fill(l.wmu, dims.latent * dims.hidden, dims.hidden);
    fill(l.wlv, dims.latent * dims.hidden, dims.hidden);
    fill(l.wd1, dims.hidden * dims.latent, dims.latent);
    fill(l.wd2, out * dims.hidden, dims.hidden);
    return p;
}

namespace {

void check_sequence(const VaeDims& dims, const TokenSequence& x) {
    if (x.max_length() != dims.max_len) {
        throw input_error("sequence length " + std::to_string(x.max_length()) + " does not match model length " +
                          std::to_string(dims.max_len));
    }
    for (Token t : x.tokens()) {
        if (t >= dims.vocab) throw input_error("token outside model vocabulary");
    }
}

struct EncoderCache {
    std::vector<double> pooled;
    std::vector<double> h1;
    EncoderOutput out;
};

EncoderCache encoder_forward(const VaeParams& p, const TokenSequence& x) {
    check_sequence(p.dims, x);
    const VaeDims& d = p.dims;
    const VaeLayout l(d);
    const auto& k = simd::active();
    const double* v = p.values.data();

    EncoderCache c;
    c.pooled.assign(d.hidden, 0.0);
    const double inv_len = 1.0 / static_cast<double>(d.max_len);
    for (std::size_t pos = 0; pos < d.max_len; ++pos) {
        const double* row = v + l.emb + (pos * d.vocab + x[pos]) * d.hidden;
        k.axpy(inv_len, row, c.pooled.data(), d.hidden);
    }
    c.h1.resize(d.hidden);
    k.matvec_bias(v + l.w1, v + l.b1, c.pooled.data(), c.h1.data(), d.hidden, d.hidden);
    for (double& h : c.h1) h = std::tanh(h);
    c.out.mean.resize(d.latent);
    c.out.logvar.resize(d.latent);
    k.matvec_bias(v + l.wmu, v + l.bmu, c.h1.data(), c.out.mean.data(), d.latent, d.hidden);
    k.matvec_bias(v + l.wlv, v + l.blv, c.h1.data(), c.out.logvar.data(), d.latent, d.hidden);
    return c;
}

void encoder_backward_cached(const VaeParams& p, const TokenSequence& x, const EncoderCache& c,
                             std::span<const double> dmean, std::span<const double> dlogvar, std::span<double> grad) {
    const VaeDims& d = p.dims;
    const VaeLayout l(d);
    const auto& k = simd::active();
    const double* v = p.values.data();
    double* g = grad.data();

    k.outer_accum(dmean.data(), c.h1.data(), g + l.wmu, d.latent, d.hidden);
    k.axpy(1.0, dmean.data(), g + l.bmu, d.latent);
    k.outer_accum(dlogvar.data(), c.h1.data(), g + l.wlv, d.latent, d.hidden);
    k.axpy(1.0, dlogvar.data(), g + l.blv, d.latent);

    std::vector<double> dh(d.hidden, 0.0);
    k.matvec_t_accum(v + l.wmu, dmean.data(), dh.data(), d.latent, d.hidden);
    k.matvec_t_accum(v + l.wlv, dlogvar.data(), dh.data(), d.latent, d.hidden);
    for (std::size_t i = 0; i < d.hidden; ++i) dh[i] *= 1.0 - c.h1[i] * c.h1[i];

    k.outer_accum(dh.data(), c.pooled.data(), g + l.w1, d.hidden, d.hidden);
    k.axpy(1.0, dh.data(), g + l.b1, d.hidden);
    std::vector<double> dpooled(d.hidden, 0.0);
    k.matvec_t_accum(v + l.w1, dh.data(), dpooled.data(), d.hidden, d.hidden);

    const double inv_len = 1.0 / static_cast<double>(d.max_len);
    for (std::size_t pos = 0; pos < d.max_len; ++pos) {
        k.axpy(inv_len, dpooled.data(), g + l.emb + (pos * d.vocab + x[pos]) * d.hidden, d.hidden);
    }
}

struct DecoderCache {
    std::vector<double> h;
    std::vector<double> logits;
};

DecoderCache decoder_forward(const VaeParams& p, std::span<const double> z) {
    const VaeDims& d = p.dims;
    if (z.size() != d.latent) {
        throw input_error("latent dimension " + std::to_string(z.size()) + " does not match model latent " +
                          std::to_string(d.latent));
    }
    const VaeLayout l(d);
    const auto& k = simd::active();
    const double* v = p.values.data();
    DecoderCache c;
    c.h.resize(d.hidden);
    k.matvec_bias(v + l.wd1, v + l.bd1, z.data(), c.h.data(), d.hidden, d.latent);
    for (double& h : c.h) h = std::tanh(h);
    c.logits.resize(d.max_len * d.vocab);
    k.matvec_bias(v + l.wd2, v + l.bd2, c.h.data(), c.logits.data(), d.max_len * d.vocab, d.hidden);
    return c;
}

// Mean cross-entropy; writes d(loss)/d(logits) into dlogits when non-empty.
double cross_entropy(std::span<const double> logits, const TokenSequence& target, const VaeDims& d,
                     std::span<double> dlogits) {
    double loss = 0.0;
    const double inv_len = 1.0 / static_cast<double>(d.max_len);
    for (std::size_t pos = 0; pos < d.max_len; ++pos) {
        const double* row = logits.data() + pos * d.vocab;
        const double mx = *std::max_element(row, row + d.vocab);
        double sum = 0.0;
        for (std::size_t t = 0; t < d.vocab; ++t) sum += std::exp(row[t] - mx);
        const double lse = mx + std::log(sum);
        loss += lse - row[target[pos]];
        if (!dlogits.empty()) {
            double* drow = dlogits.data() + pos * d.vocab;
            for (std::size_t t = 0; t < d.vocab; ++t) drow[t] = std::exp(row[t] - lse) * inv_len;
            drow[target[pos]] -= inv_len;
        }
    }
    return loss * inv_len;
}

}  // namespace

EncoderOutput encode(const VaeParams& params, const TokenSequence& x) { return encoder_forward(params, x).out; }

std::vector<double> decode_logits(const VaeParams& params, std::span<const double> z) {
    return decoder_forward(params, z).logits;
}

TokenSequence argmax_tokens(std::span<const double> logits, const VaeDims& dims) {
    if (logits.size() != dims.max_len * dims.vocab) throw input_error("logit matrix has wrong shape");
    std::vector<Token> tokens(dims.max_len);
    for (std::size_t pos = 0; pos < dims.max_len; ++pos) {
        const double* row = logits.data() + pos * dims.vocab;
        tokens[pos] = static_cast<Token>(std::max_element(row, row + dims.vocab) - row);
    }
    return TokenSequence(std::move(tokens), dims.vocab);
}

TokenSequence decode_argmax(const VaeParams& params, std::span<const double> z) {
    return argmax_tokens(decode_logits(params, z), params.dims);
}

double reconstruction_loss(std::span<const double> logits, const TokenSequence& target, const VaeDims& dims) {
    check_sequence(dims, target);
    if (logits.size() != dims.max_len * dims.vocab) throw input_error("logit matrix has wrong shape");
    return cross_entropy(logits, target, dims, {});
}

double kl_standard_normal(std::span<const double> mean, std::span<const double> logvar) {
    double kl = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        kl += 0.5 * (std::exp(logvar[i]) + mean[i] * mean[i] - 1.0 - logvar[i]);
    }
    return kl;
}

double decoder_loss_backward(const VaeParams& params, std::span<const double> z, const TokenSequence& target,
                             std::span<double> grad, std::span<double> grad_z) {
    check_sequence(params.dims, target);
    const VaeDims& d = params.dims;
    const VaeLayout l(d);
    const auto& k = simd::active();
    const double* v = params.values.data();

    const DecoderCache c = decoder_forward(params, z);
    const std::size_t out = d.max_len * d.vocab;
    std::vector<double> dlogits(out);
    const double loss = cross_entropy(c.logits, target, d, dlogits);

    if (!grad.empty()) {
        k.outer_accum(dlogits.data(), c.h.data(), grad.data() + l.wd2, out, d.hidden);
        k.axpy(1.0, dlogits.data(), grad.data() + l.bd2, out);
    }
    std::vector<double> dh(d.hidden, 0.0);
    k.matvec_t_accum(v + l.wd2, dlogits.data(), dh.data(), out, d.hidden);
    for (std::size_t i = 0; i < d.hidden; ++i) dh[i] *= 1.0 - c.h[i] * c.h[i];
    if (!grad.empty()) {
        k.outer_accum(dh.data(), z.data(), grad.data() + l.wd1, d.hidden, d.latent);
        k.axpy(1.0, dh.data(), grad.data() + l.bd1, d.hidden);
    }
    if (!grad_z.empty()) k.matvec_t_accum(v + l.wd1, dh.data(), grad_z.data(), d.hidden, d.latent);
    return loss;
}

LatentGrad grad_wrt_latent(const VaeParams& params, std::span<const double> z, const TokenSequence& target) {
    LatentGrad g;
    g.grad.assign(params.dims.latent, 0.0);
    g.loss = decoder_loss_backward(params, z, target, {}, g.grad);
    return g;
}

void encoder_backward(const VaeParams& params, const TokenSequence& x, std::span<const double> dmean,
                      std::span<const double> dlogvar, std::span<double> grad) {
    if (grad.size() != params.values.size()) throw input_error("gradient buffer has wrong size");
    const EncoderCache c = encoder_forward(params, x);
    encoder_backward_cached(params, x, c, dmean, dlogvar, grad);
}

double elbo_sample_loss(const VaeParams& params, const TokenSequence& x, std::span<const double> eps,
                        double kl_weight, std::span<double> grad) {
    const VaeDims& d = params.dims;
    if (eps.size() != d.latent) throw input_error("noise dimension mismatch");
    const EncoderCache enc = encoder_forward(params, x);
    const auto& mu = enc.out.mean;
    const auto& lv = enc.out.logvar;

    std::vector<double> z(d.latent), sd(d.latent);
    for (std::size_t i = 0; i < d.latent; ++i) {
        sd[i] = std::exp(0.5 * lv[i]);
        z[i] = mu[i] + sd[i] * eps[i];
    }
    std::vector<double> dz(d.latent, 0.0);
    const double ce = decoder_loss_backward(params, z, x, grad, grad.empty() ? std::span<double>{} : dz);
    const double loss = ce + kl_weight * kl_standard_normal(mu, lv);
    if (grad.empty()) return loss;

    std::vector<double> dmu(d.latent), dlv(d.latent);
    for (std::size_t i = 0; i < d.latent; ++i) {
        dmu[i] = dz[i] + kl_weight * mu[i];
        dlv[i] = dz[i] * eps[i] * 0.5 * sd[i] + kl_weight * 0.5 * (std::exp(lv[i]) - 1.0);
    }
    encoder_backward_cached(params, x, enc, dmu, dlv, grad);
    return loss;
}

double corpus_loss(const VaeParams& params, std::span<const TokenSequence> corpus, double kl_weight) {
    if (corpus.empty()) throw input_error("corpus_loss of empty corpus");
    double total = 0.0;
    for (const auto& x : corpus) {
        const EncoderOutput e = encode(params, x);
        const auto logits = decode_logits(params, e.mean);
        total += cross_entropy(logits, x, params.dims, {}) + kl_weight * kl_standard_normal(e.mean, e.logvar);
    }
    return total / static_cast<double>(corpus.size());
}

VaeParams train_vae(const VaeParams& init, std::span<const TokenSequence> corpus, const VaeTrainOptions& options,
                    Rng& rng, VaeTrainReport* report) {
    if (corpus.empty()) throw input_error("train_vae needs a non-empty corpus");
    if (options.batch_size == 0) throw config_error("vae batch size must be positive");
    for (const auto& x : corpus) check_sequence(init.dims, x);

    VaeParams params = init;
    VaeParams best = init;
    double best_loss = corpus_loss(init, corpus, options.kl_weight);
    VaeTrainReport rep;
    rep.loss_before = best_loss;

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(params.values.size());
    std::vector<double> eps(init.dims.latent);
    long step = 0;

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        for (std::size_t start = 0; start < order.size(); start += options.batch_size, ++step) {
            const std::size_t stop = std::min(order.size(), start + options.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < stop; ++b) {
                for (double& e : eps) e = standard_normal(rng);
                batch_loss += elbo_sample_loss(params, corpus[order[b]], eps, options.kl_weight, grad);
            }
            if (!std::isfinite(batch_loss)) {
                throw Error(ErrorKind::Training, "vae training diverged at step " + std::to_string(step));
            }
            const double scale = options.lr / static_cast<double>(stop - start);
            simd::axpy(-scale, grad, params.values);
        }
        const double loss = corpus_loss(params, corpus, options.kl_weight);
        if (!std::isfinite(loss)) {
            throw Error(ErrorKind::Training, "vae training diverged at step " + std::to_string(step));
        }
        if (loss < best_loss) {
            best_loss = loss;
            best = params;
            rep.best_epoch = epoch;
        }
    }
    rep.loss_after = best_loss;
    if (report) *report = rep;
    return best;
}

void save_checkpoint(const VaeParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write checkpoint " + path.string());
    out << "invbo-vae 1\n"
        << "vocab " << params.dims.vocab << "\n"
        << "max_len " << params.dims.max_len << "\n"
        << "latent " << params.dims.latent << "\n"
        << "hidden " << params.dims.hidden << "\n"
        << "params " << params.values.size() << "\n";
    out << std::setprecision(17);
    for (double v : params.values) out << v << "\n";
    if (!out) throw io_error("failed writing checkpoint " + path.string());
}

VaeParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read checkpoint " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "invbo-vae" || version != 1) throw io_error("not an invbo-vae v1 checkpoint: " + path.string());
    VaeDims dims;
    auto read_field = [&](const char* key, std::size_t& dst) {
        std::string k;
        if (!(in >> k >> dst) || k != key) throw io_error(std::string("checkpoint missing field '") + key + "'");
    };
    read_field("vocab", dims.vocab);
    read_field("max_len", dims.max_len);
    read_field("latent", dims.latent);
    read_field("hidden", dims.hidden);
    std::size_t count = 0;
    read_field("params", count);
    try {
        dims.validate();
    } catch (const Error& e) {
        throw io_error(std::string("checkpoint dims invalid: ") + e.what());
    }
    if (count != dims.param_count()) throw io_error("checkpoint parameter count does not match its dims");
    VaeParams p{dims, std::vector<double>(count)};
    for (double& v : p.values) {
        if (!(in >> v) || !std::isfinite(v)) throw io_error("checkpoint truncated or non-finite: " + path.string());
    }
    return p;
}

}  // namespace invbo
