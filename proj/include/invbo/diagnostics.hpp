#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "invbo/errors.hpp"
#include "invbo/gp.hpp"
#include "invbo/inversion.hpp"
#include "invbo/vae.hpp"

namespace invbo {

/// max |fn(a) - fn(b)| / metric(a, b) over pairs with nonzero distance. This is
/// an empirical lower bound on the true Lipschitz constant.
template <class T, class Fn, class Metric>
double estimate_lipschitz(Fn&& fn, std::span<const std::pair<T, T>> pairs, Metric&& metric) {
    double best = 0.0;
    bool any = false;
    for (const auto& [a, b] : pairs) {
        const double d = metric(a, b);
        if (!(d > 0.0)) continue;
        any = true;
        best = std::max(best, std::abs(fn(a) - fn(b)) / d);
    }
    if (!any) throw input_error("estimate_lipschitz: every pair is coincident");
    return best;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b);

struct BoundOptions {
    double delta = 0.5;
    std::size_t n_samples = 200;
    std::size_t n_pairs = 10000;
};

struct BoundSample {
    double distance = 0.0;  // d_Z(z, z')
    double lhs = 0.0;       // |f(p(z')) - m(z')|
    double rhs = 0.0;       // c + gamma L1 + delta (L2 + L3)
    double margin = 0.0;    // rhs - lhs
    bool crossed = false;   // p(z') differs from p(z): an argmax decision boundary lies between them
    bool violated = false;
};

struct BoundReport {
    double c = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    std::size_t samples = 0;
    double violation_rate = 0.0;
    std::size_t interior_samples = 0;       // samples that decode like the anchor code
    double interior_violation_rate = 0.0;   // violations among them; 0 when there are none
    double mean_margin = 0.0;
    double min_margin = 0.0;
    double mean_abs_error = 0.0;  // mean lhs over the region
    std::vector<BoundSample> rows;
};

/// Samples z' uniformly in the Euclidean delta-ball around the anchor code and
/// tests |f(p(z')) - m(z')| <= c + gamma L1 + delta (L2 + L3), where c and
/// gamma are measured at the anchor and L1..L3 are empirical estimates. A
/// violation means an estimate fell short or the function spikes locally; it
/// is reported, not asserted. With argmax decoding f(p(.)) jumps at decision
/// boundaries, so samples are flagged when they cross one and the violation
/// rate is also reported over the samples that do not.
BoundReport check_bound(const VaeParams& vae, const GpModel& gp, const std::function<double(const TokenSequence&)>& f,
                        const Triplet& anchor, const BoundOptions& options, Rng& rng);

struct FitComparison {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double encoder_train_rmse = 0.0;
    double encoder_test_rmse = 0.0;
    double decoder_train_rmse = 0.0;
    double decoder_test_rmse = 0.0;
    double encoder_aligned_fraction = 0.0;
    double decoder_aligned_fraction = 0.0;
};

struct FitComparisonOptions {
    std::size_t n_train = 300;
    std::size_t n_test = 100;
    int gp_steps = 50;
    double gp_lr = 0.1;
    InversionOptions inversion;
};

/// Fits one GP on encoder triplets (z = encoder mean) and one on decoder
/// triplets (z from inversion) over the same sequences, then scores each
/// against f(decode_argmax(z)) at its own codes on the train and held-out sets.
FitComparison surrogate_fit_comparison(const VaeParams& vae, std::span<const TokenSequence> sequences,
                                       const std::function<double(const TokenSequence&)>& f,
                                       const FitComparisonOptions& options, Rng& rng);

}  // namespace invbo
