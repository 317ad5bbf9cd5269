#include <doctest.h>

#include <cmath>

#include "invbo/errors.hpp"
#include "invbo/trust_region.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace invbo;

TEST_SUITE("trust_region") {
    TEST_CASE("three successes double the side length") {
        TrustRegionState s = TrustRegionState::initial({});
        for (int i = 0; i < 3; ++i) s = update_schedule(s, true);
        CHECK(s.length == doctest::Approx(1.6));
        CHECK(s.success_count == 0);
        for (int i = 0; i < 3; ++i) s = update_schedule(s, true);
        CHECK(s.length == doctest::Approx(1.6));
    }

    TEST_CASE("failures halve and a collapse restarts at the initial length") {
        TrustRegionConfig c;
        TrustRegionState s = TrustRegionState::initial(c);
        s.length = 0.009;
        for (int i = 0; i < c.failure_tolerance; ++i) s = update_schedule(s, false);
        CHECK(s.length == doctest::Approx(c.length_init));
        CHECK(s.failure_count == 0);
    }

    TEST_CASE("a failure clears the success streak") {
        TrustRegionState s = TrustRegionState::initial({});
        s = update_schedule(update_schedule(s, true), true);
        s = update_schedule(s, false);
        CHECK(s.success_count == 0);
        CHECK(s.failure_count == 1);
        s = update_schedule(s, true);
        CHECK(s.length == doctest::Approx(0.8));
    }

    TEST_CASE("schedule replays match the reference machine") {
        Rng rng = make_rng(11);
        for (int stream = 0; stream < 10000; ++stream) {
            TrustRegionConfig c;
            c.success_tolerance = 1 + stream % 4;
            c.failure_tolerance = 1 + (stream / 4) % 6;
            const double p = uniform01(rng);
            TrustRegionState s = TrustRegionState::initial(c);
            oracle::TrMachine m(c);
            bool ok = true;
            for (int t = 0; t < 60 && ok; ++t) {
                const bool improved = uniform01(rng) < p;
                s = update_schedule(s, improved);
                m.step(improved);
                ok = s.length == m.length && s.success_count == m.successes() && s.failure_count == m.failures();
                ok = ok && s.success_count < c.success_tolerance && s.failure_count < c.failure_tolerance;
                ok = ok && s.length > 0.0 && s.length <= c.length_max;
            }
            REQUIRE(ok);
        }
    }

    TEST_CASE("invalid configs are rejected") {
        TrustRegionConfig c;
        c.length_min = 1.0;
        CHECK_THROWS_AS(c.validate(), Error);
        TrustRegionConfig d;
        d.failure_tolerance = 0;
        CHECK_THROWS_AS(d.validate(), Error);
    }

    TEST_CASE("ard weighting follows the lengthscale ratios") {
        TrustRegionState s = TrustRegionState::initial({});
        const Box dom = Box::uniform(2, -10, 10);
        const std::vector<double> ls = {1.0, 3.0};
        const Box b = region_bounds(std::vector<double>{0.0, 0.0}, s, ls, dom, RegionShape::ArdWeighted);
        CHECK(b.upper[0] - b.lower[0] == doctest::Approx(0.8 * 1.0 / 2.0));
        CHECK(b.upper[1] - b.lower[1] == doctest::Approx(0.8 * 3.0 / 2.0));
        const Box iso = region_bounds(std::vector<double>{0.0, 0.0}, s, ls, dom, RegionShape::Isotropic);
        CHECK(iso.upper[1] - iso.lower[1] == doctest::Approx(0.8));
    }

    TEST_CASE("regions are clipped to the domain and anchors clamped into it") {
        TrustRegionState s = TrustRegionState::initial({});
        const Box dom = Box::uniform(1, 0, 1);
        const Box b = region_bounds(std::vector<double>{5.0}, s, std::vector<double>{1.0}, dom);
        CHECK(b.upper[0] == 1.0);
        CHECK(b.lower[0] == doctest::Approx(0.6));
        CHECK(dom.contains(b.lower));
    }

    TEST_CASE("candidates are uniform in the box") {
        Rng rng = make_rng(12);
        const Box b{{-1.0, 2.0}, {3.0, 2.5}};
        const Points c = sample_candidates(b, 10000, rng);
        for (std::size_t d = 0; d < 2; ++d) {
            double mean = 0.0;
            for (const auto& p : c) {
                CHECK(b.contains(p));
                mean += p[d];
            }
            mean /= 10000.0;
            const double width = b.upper[d] - b.lower[d];
            const double se = width / std::sqrt(12.0) / 100.0;
            CHECK(std::abs(mean - 0.5 * (b.lower[d] + b.upper[d])) < 3.0 * se);
        }
        CHECK(sample_candidates(b, 0, rng).empty());
    }

    TEST_CASE("degenerate widths pin the coordinate") {
        Rng rng = make_rng(13);
        const Box b{{0.5, 0.0}, {0.5, 1.0}};
        for (const auto& p : sample_candidates(b, 20, rng)) CHECK(p[0] == 0.5);
    }

    TEST_CASE("perturbed candidates keep most coordinates at the anchor") {
        Rng rng = make_rng(14);
        const std::size_t dim = 40;
        const Box b = Box::uniform(dim, 0.0, 1.0);
        const Point anchor(dim, 0.37);
        const double p = 0.25;
        const std::size_t n = 4000;
        const Points cand = perturb_candidates(anchor, b, n, p, rng);
        REQUIRE(cand.size() == n);
        double changed = 0.0;
        for (const auto& c : cand) {
            std::size_t k = 0;
            for (std::size_t d = 0; d < dim; ++d) {
                CHECK(c[d] >= 0.0);
                CHECK(c[d] <= 1.0);
                k += c[d] != anchor[d] ? 1 : 0;
            }
            CHECK(k >= 1);
            changed += static_cast<double>(k);
        }
        // binomial(dim, p) count, conditioned away from zero which is negligible here
        const double mean = changed / static_cast<double>(n);
        const double se = std::sqrt(dim * p * (1 - p) / static_cast<double>(n));
        CHECK(std::abs(mean - dim * p) < 4.0 * se);
    }

    TEST_CASE("perturbation at probability one is plain uniform sampling") {
        const Box b{{0.0, -1.0, 2.0}, {1.0, 1.0, 5.0}};
        const Point anchor{0.5, 0.0, 3.0};
        Rng a = make_rng(15), c = make_rng(15);
        CHECK(perturb_candidates(anchor, b, 50, 1.0, a) == sample_candidates(b, 50, c));
        Rng r = make_rng(16);
        CHECK_THROWS_AS(perturb_candidates(anchor, b, 5, 0.0, r), Error);
        CHECK_THROWS_AS(perturb_candidates(Point{0.5}, b, 5, 0.5, r), Error);
        // a tiny probability still moves one coordinate per draw
        for (const auto& p : perturb_candidates(anchor, b, 30, 1e-9, r)) {
            int moved = 0;
            for (std::size_t d = 0; d < 3; ++d) moved += p[d] != anchor[d] ? 1 : 0;
            CHECK(moved == 1);
        }
    }
}
