#include <doctest.h>

#include "invbo/benchmarks.hpp"
#include "invbo/diagnostics.hpp"
#include "invbo/errors.hpp"
#include "test_util.hpp"

using namespace invbo;

namespace {

using Pair = std::pair<double, double>;

std::vector<Pair> random_pairs(std::size_t n, Rng& rng) {
    std::vector<Pair> p;
    for (std::size_t i = 0; i < n; ++i) p.emplace_back(-5.0 + 10.0 * uniform01(rng), -5.0 + 10.0 * uniform01(rng));
    return p;
}

const auto kAbs = [](double a, double b) { return std::abs(a - b); };

struct Pipeline {
    VaeParams vae;
    DiscreteTask task;
    std::vector<Triplet> triplets;
    GpModel gp;
};

const Pipeline& pipeline() {
    static const Pipeline p = [] {
        Pipeline out;
        out.task = make_task("target_string");
        const VaeDims d{16, 16, 8, 64};
        Rng rng = make_rng(71);
        std::vector<TokenSequence> corpus(out.task.corpus.begin(), out.task.corpus.begin() + 60);
        out.vae = train_vae(VaeParams::random(d, rng), corpus, {150, 1.0, 0.01, 8}, rng);
        Points z;
        std::vector<double> y;
        for (const auto& x : corpus) {
            const InversionResult r = invert(out.vae, x, {300, 0.1, 1e-9});
            out.triplets.push_back({x, r.z_inv, out.task.score(x), r.converged});
            z.push_back(r.z_inv);
            y.push_back(out.task.score(x));
        }
        out.gp = fit_gp(z, y, GpHyperparams::isotropic(d.latent), 20, 0.1);
        return out;
    }();
    return p;
}

}  // namespace

TEST_SUITE("diagnostics") {
    TEST_CASE("lipschitz of simple functions") {
        Rng rng = make_rng(72);
        const auto pairs = random_pairs(500, rng);
        const std::span<const Pair> sp(pairs);
        CHECK(estimate_lipschitz<double>([](double) { return 4.0; }, sp, kAbs) == 0.0);
        CHECK(estimate_lipschitz<double>([](double x) { return x; }, sp, kAbs) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(estimate_lipschitz<double>([](double x) { return 3.0 * x; }, sp, kAbs) - 3.0) < 1e-12);
    }

    TEST_CASE("coincident pairs cannot give an estimate") {
        const std::vector<Pair> same = {{1.0, 1.0}, {2.0, 2.0}};
        CHECK_THROWS_AS(estimate_lipschitz<double>([](double x) { return x; }, std::span<const Pair>(same), kAbs),
                        Error);
    }

    TEST_CASE("adding pairs never lowers the estimate") {
        Rng rng = make_rng(73);
        auto f = [](double x) { return std::sin(3.0 * x) + 0.1 * x * x; };
        const auto pairs = random_pairs(300, rng);
        double last = 0.0;
        for (std::size_t n = 1; n <= pairs.size(); n += 7) {
            const double est = estimate_lipschitz<double>(f, std::span<const Pair>(pairs.data(), n), kAbs);
            CHECK(est >= last);
            last = est;
        }
    }

    TEST_CASE("zero radius at an aligned anchor reports no violation") {
        const Pipeline& p = pipeline();
        int checked = 0;
        for (const Triplet& t : p.triplets) {
            if (!t.aligned) continue;
            Rng rng = make_rng(74);
            const BoundReport r = check_bound(p.vae, p.gp, p.task.score, t, {0.0, 25, 100}, rng);
            CHECK(r.gamma == 0.0);
            CHECK(r.violation_rate == 0.0);
            CHECK(r.rows.size() == 25);
            CHECK(r.samples == 25);
            CHECK(r.interior_samples == 25);
            CHECK(r.interior_violation_rate == 0.0);
            for (const auto& row : r.rows) {
                CHECK(row.distance == 0.0);
                CHECK(row.lhs == doctest::Approx(r.c).epsilon(1e-12));
            }
            if (++checked == 5) break;
        }
        CHECK(checked > 0);
    }

    TEST_CASE("the anchor itself never violates the bound") {
        const Pipeline& p = pipeline();
        for (std::size_t i = 0; i < 10; ++i) {
            Triplet t = p.triplets[i];
            t.z = encode(p.vae, t.x).mean;  // possibly misaligned, gamma measured
            Rng rng = make_rng(75, i);
            const BoundReport r = check_bound(p.vae, p.gp, p.task.score, t, {0.0, 3, 50}, rng);
            CHECK(r.violation_rate == 0.0);
        }
    }

    TEST_CASE("report shape for a positive radius") {
        const Pipeline& p = pipeline();
        Rng rng = make_rng(76);
        const BoundReport r = check_bound(p.vae, p.gp, p.task.score, p.triplets[0], {0.7, 40, 500}, rng);
        CHECK(r.rows.size() == 40);
        CHECK(r.delta == 0.7);
        CHECK(r.violation_rate >= 0.0);
        CHECK(r.violation_rate <= 1.0);
        std::size_t interior = 0, interior_violations = 0;
        for (const auto& row : r.rows) {
            interior += row.crossed ? 0 : 1;
            interior_violations += !row.crossed && row.violated ? 1 : 0;
            CHECK(row.distance <= 0.7 + 1e-12);
            CHECK(row.rhs == doctest::Approx(r.c + r.gamma * r.l1 + r.delta * (r.l2 + r.l3)));
        }
        CHECK(r.interior_samples == interior);
        if (interior > 0) {
            CHECK(r.interior_violation_rate ==
                  doctest::Approx(static_cast<double>(interior_violations) / static_cast<double>(interior)));
        }
        CHECK(r.l1 >= 0.0);
        CHECK(r.l2 >= 0.0);
        CHECK(r.l3 >= 0.0);
        CHECK_THROWS_AS(check_bound(p.vae, p.gp, p.task.score, p.triplets[0], {-1.0, 4, 10}, rng), Error);
    }

    TEST_CASE("fit comparison needs test points") {
        const Pipeline& p = pipeline();
        Rng rng = make_rng(77);
        FitComparisonOptions opt;
        opt.n_train = 10;
        opt.n_test = 0;
        CHECK_THROWS_AS(surrogate_fit_comparison(p.vae, p.task.corpus, p.task.score, opt, rng), Error);
        opt.n_test = 5000;
        CHECK_THROWS_AS(surrogate_fit_comparison(p.vae, p.task.corpus, p.task.score, opt, rng), Error);
    }

    TEST_CASE("fit comparison reports both surrogates") {
        const Pipeline& p = pipeline();
        Rng rng = make_rng(78);
        FitComparisonOptions opt;
        opt.n_train = 40;
        opt.n_test = 15;
        opt.gp_steps = 10;
        opt.inversion.max_iters = 200;
        const FitComparison f = surrogate_fit_comparison(p.vae, p.task.corpus, p.task.score, opt, rng);
        CHECK(f.n_train == 40);
        CHECK(f.n_test == 15);
        for (double v : {f.encoder_train_rmse, f.encoder_test_rmse, f.decoder_train_rmse, f.decoder_test_rmse}) {
            CHECK(std::isfinite(v));
            CHECK(v >= 0.0);
        }
        CHECK(f.decoder_aligned_fraction >= f.encoder_aligned_fraction);
    }

    TEST_CASE("perfect reconstruction makes both triplet sets agree") {
        const Pipeline& p = pipeline();
        // sequences the encoder already reproduces invert in zero steps to the same code
        std::vector<TokenSequence> clean;
        for (const auto& x : p.task.corpus) {
            if (decode_argmax(p.vae, encode(p.vae, x).mean) == x) clean.push_back(x);
            if (clean.size() == 30) break;
        }
        REQUIRE(clean.size() >= 12);
        Rng rng = make_rng(79);
        FitComparisonOptions opt;
        opt.n_train = clean.size() - 6;
        opt.n_test = 6;
        opt.gp_steps = 10;
        const FitComparison f = surrogate_fit_comparison(p.vae, clean, p.task.score, opt, rng);
        CHECK(f.encoder_test_rmse == doctest::Approx(f.decoder_test_rmse).epsilon(1e-12));
        CHECK(f.encoder_train_rmse == doctest::Approx(f.decoder_train_rmse).epsilon(1e-12));
    }
}
