#include <algorithm>
#include <limits>
#include <numeric>

#include "invbo/diagnostics.hpp"

namespace invbo {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw input_error("euclidean_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

namespace {

Point sample_in_ball(const Point& center, double radius, Rng& rng) {
    Point p = center;
    if (!(radius > 0.0)) return p;
    Point dir(center.size());
    double norm = 0.0;
    while (!(norm > 0.0)) {
        norm = 0.0;
        for (double& v : dir) {
            v = standard_normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
    }
    const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(center.size()));
    for (std::size_t d = 0; d < p.size(); ++d) p[d] += r * dir[d] / norm;
    return p;
}

// Lipschitz estimate over an index set; coincident-only sets give 0.
template <class Fn, class Metric>
double lipschitz_or_zero(std::span<const std::pair<std::size_t, std::size_t>> pairs, Fn&& fn, Metric&& metric) {
    try {
        return estimate_lipschitz<std::size_t>(fn, pairs, metric);
    } catch (const Error&) {
        return 0.0;
    }
}

}  // namespace

BoundReport check_bound(const VaeParams& vae, const GpModel& gp, const std::function<double(const TokenSequence&)>& f,
                        const Triplet& anchor, const BoundOptions& options, Rng& rng) {
    if (options.delta < 0.0) throw input_error("check_bound: delta must be non-negative");
    BoundReport rep;
    rep.delta = options.delta;
    rep.samples = options.n_samples;

    // index 0 is the anchor code itself
    Points zs{anchor.z};
    for (std::size_t i = 0; i < options.n_samples; ++i) zs.push_back(sample_in_ball(anchor.z, options.delta, rng));
    std::vector<TokenSequence> xs;
    std::vector<double> fz, mz;
    const Posterior post = gp.posterior(zs);
    for (std::size_t i = 0; i < zs.size(); ++i) {
        xs.push_back(decode_argmax(vae, zs[i]));
        fz.push_back(f(xs.back()));
        mz.push_back(post.means[i]);
    }
    const double fx = f(anchor.x);
    rep.c = std::abs(fx - mz[0]);
    rep.gamma = normalized_levenshtein(anchor.x, xs[0]);

    // sequence pool for L1: the anchor sequence is last
    std::vector<TokenSequence> seqs = xs;
    std::vector<double> fseq = fz;
    seqs.push_back(anchor.x);
    fseq.push_back(fx);
    const std::size_t n = zs.size();
    std::vector<std::pair<std::size_t, std::size_t>> x_pairs{{n, 0}}, z_pairs;
    for (std::size_t i = 1; i < n; ++i) {
        z_pairs.emplace_back(0, i);
        x_pairs.emplace_back(n, i);
    }
    for (std::size_t p = 0; p < options.n_pairs; ++p) {
        const auto a = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
        const auto b = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
        z_pairs.emplace_back(std::min(a, n - 1), std::min(b, n - 1));
        const auto c = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n + 1));
        const auto d = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n + 1));
        x_pairs.emplace_back(std::min(c, n), std::min(d, n));
    }
    auto seq_metric = [&](std::size_t a, std::size_t b) { return normalized_levenshtein(seqs[a], seqs[b]); };
    auto z_metric = [&](std::size_t a, std::size_t b) { return euclidean_distance(zs[a], zs[b]); };
    rep.l1 = lipschitz_or_zero(std::span<const std::pair<std::size_t, std::size_t>>(x_pairs),
                               [&](std::size_t i) { return fseq[i]; }, seq_metric);
    rep.l2 = lipschitz_or_zero(std::span<const std::pair<std::size_t, std::size_t>>(z_pairs),
                               [&](std::size_t i) { return mz[i]; }, z_metric);
    rep.l3 = lipschitz_or_zero(std::span<const std::pair<std::size_t, std::size_t>>(z_pairs),
                               [&](std::size_t i) { return fz[i]; }, z_metric);

    const double rhs = rep.c + rep.gamma * rep.l1 + rep.delta * (rep.l2 + rep.l3);
    std::size_t violations = 0, interior_violations = 0;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
        BoundSample s;
        s.distance = euclidean_distance(anchor.z, zs[i]);
        s.lhs = std::abs(fz[i] - mz[i]);
        s.rhs = rhs;
        s.margin = rhs - s.lhs;
        // relative slack for rounding in the telescoped terms
        s.violated = s.margin < -1e-12 * std::max(1.0, rhs);
        s.crossed = !(xs[i] == xs[0]);
        violations += s.violated ? 1 : 0;
        if (!s.crossed) {
            ++rep.interior_samples;
            interior_violations += s.violated ? 1 : 0;
        }
        rep.mean_margin += s.margin;
        rep.mean_abs_error += s.lhs;
        rep.min_margin = std::min(rep.min_margin, s.margin);
        rep.rows.push_back(s);
    }
    if (rep.interior_samples > 0) {
        rep.interior_violation_rate =
            static_cast<double>(interior_violations) / static_cast<double>(rep.interior_samples);
    }
    if (rep.samples > 0) {
        rep.violation_rate = static_cast<double>(violations) / static_cast<double>(rep.samples);
        rep.mean_margin /= static_cast<double>(rep.samples);
        rep.mean_abs_error /= static_cast<double>(rep.samples);
    } else {
        rep.min_margin = 0.0;
    }
    return rep;
}

FitComparison surrogate_fit_comparison(const VaeParams& vae, std::span<const TokenSequence> sequences,
                                       const std::function<double(const TokenSequence&)>& f,
                                       const FitComparisonOptions& options, Rng& rng) {
    if (options.n_test == 0) throw input_error("surrogate_fit_comparison needs at least one test point");
    if (options.n_train < 2) throw input_error("surrogate_fit_comparison needs at least two training points");
    if (sequences.size() < options.n_train + options.n_test) {
        throw input_error("surrogate_fit_comparison: not enough sequences for the requested split");
    }
    std::vector<std::size_t> idx(sequences.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < options.n_train + options.n_test; ++i) {
        const std::size_t span = idx.size() - i;
        const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * span));
        std::swap(idx[i], idx[j]);
    }

    FitComparison out;
    out.n_train = options.n_train;
    out.n_test = options.n_test;
    const std::size_t total = options.n_train + options.n_test;
    Points z_enc, z_dec;
    std::vector<double> y;
    std::size_t enc_aligned = 0, dec_aligned = 0;
    for (std::size_t i = 0; i < total; ++i) {
        const TokenSequence& x = sequences[idx[i]];
        y.push_back(f(x));
        z_enc.push_back(encode(vae, x).mean);
        const InversionResult r = invert(vae, x, options.inversion);
        z_dec.push_back(r.z_inv);
        enc_aligned += normalized_levenshtein(x, decode_argmax(vae, z_enc.back())) == 0.0 ? 1 : 0;
        dec_aligned += r.converged ? 1 : 0;
    }
    out.encoder_aligned_fraction = static_cast<double>(enc_aligned) / static_cast<double>(total);
    out.decoder_aligned_fraction = static_cast<double>(dec_aligned) / static_cast<double>(total);

    auto evaluate = [&](const Points& z, double& train_rmse, double& test_rmse) {
        const Points train(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(options.n_train));
        const std::vector<double> y_train(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(options.n_train));
        const GpModel gp = fit_gp(train, y_train, GpHyperparams::isotropic(vae.dims.latent, 1.0, 1.0, 1e-2),
                                  options.gp_steps, options.gp_lr);
        const Posterior post = gp.posterior(z);
        double se_train = 0.0, se_test = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            const double truth = f(decode_argmax(vae, z[i]));
            const double err = post.means[i] - truth;
            (i < options.n_train ? se_train : se_test) += err * err;
        }
        train_rmse = std::sqrt(se_train / static_cast<double>(options.n_train));
        test_rmse = std::sqrt(se_test / static_cast<double>(options.n_test));
    };
    evaluate(z_enc, out.encoder_train_rmse, out.encoder_test_rmse);
    evaluate(z_dec, out.decoder_train_rmse, out.decoder_test_rmse);
    return out;
}

}  // namespace invbo
