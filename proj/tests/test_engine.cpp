#include <doctest.h>

#include <set>

#include "invbo/engine.hpp"
#include "invbo/errors.hpp"
#include "invbo/results_io.hpp"
#include "oracles.hpp"

using namespace invbo;

namespace {

RunConfig small_config(std::uint64_t seed = 3) {
    RunConfig c;
    c.seed = seed;
    c.budget = 60;
    c.n_init = 20;
    c.top_k = 10;
    c.n_cand = 64;
    c.gp_steps = 10;
    c.vae.hidden = 16;
    c.vae_pretrain_epochs = 3;
    c.vae_update_epochs = 1;
    c.n_fail_limit = 2;
    c.inversion.max_iters = 50;
    return c;
}

DiscreteTask task_for(const RunConfig& c) { return make_task(c.task, {}, c.vae.max_len, c.vae.vocab); }

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("working subset matches the exhaustive oracle") {
        Rng rng = make_rng(61);
        for (int t = 0; t < 2000; ++t) {
            std::vector<Triplet> ds;
            const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 30);
            for (std::size_t i = 0; i < n; ++i) {
                Triplet tr;
                tr.x = TokenSequence::from_content({static_cast<Token>(1 + uniform01(rng) * 6)}, 4, 8);
                tr.y = std::floor(uniform01(rng) * 4.0);  // many ties
                ds.push_back(tr);
            }
            const std::size_t recent = static_cast<std::size_t>(uniform01(rng) * 6);
            const std::size_t k = static_cast<std::size_t>(uniform01(rng) * 8);
            REQUIRE(working_subset(ds, recent, k) == oracle::working_subset(ds, recent, k));
        }
    }

    TEST_CASE("working subset holds no duplicate sequences") {
        std::vector<Triplet> ds;
        for (int i = 0; i < 6; ++i) {
            Triplet t;
            t.x = TokenSequence::from_content({static_cast<Token>(1 + i % 2)}, 4, 8);
            t.y = static_cast<double>(i % 3);
            ds.push_back(t);
        }
        const auto s = working_subset(ds, 2, 5);
        CHECK(s.size() == 2);
        CHECK(working_subset({}, 3, 3).empty());
    }

    TEST_CASE("config validation") {
        RunConfig c = small_config();
        c.n_init = 0;
        CHECK_THROWS_AS(c.validate(), Error);
        c = small_config();
        c.budget = c.n_init - 1;
        CHECK_THROWS_AS(c.validate(), Error);
        c = small_config();
        c.batch_size = 0;
        CHECK_THROWS_AS(c.validate(), Error);
    }

    TEST_CASE("initial dataset accounting per alignment mode") {
        RunConfig c = small_config();
        const DiscreteTask task = task_for(c);
        const VaeParams vae = pretrain_vae(c, task);
        for (AlignMode m : {AlignMode::Inversion, AlignMode::EncoderOnly, AlignMode::Recentering}) {
            c.align_mode = m;
            LboRun run(c, task, vae);
            run.build_initial_dataset();
            const std::size_t expected = m == AlignMode::Recentering ? 2 * c.n_init : c.n_init;
            CHECK(run.state().oracle_calls_used == expected);
            CHECK(run.oracle().calls() == expected);
            CHECK(run.state().dataset.size() == c.n_init);
            CHECK(run.state().history.size() == expected);
        }
    }

    TEST_CASE("budget equal to n_init runs no optimization steps") {
        RunConfig c = small_config();
        c.budget = c.n_init;
        const RunResult r = run(c);
        CHECK(r.state.bo_steps == 0);
        double best = -1e300;
        for (const auto& t : r.state.dataset) best = std::max(best, t.y);
        CHECK(r.state.best_score == best);
    }

    TEST_CASE("full run spends exactly the budget") {
        for (AlignMode m : {AlignMode::Inversion, AlignMode::Recentering}) {
            RunConfig c = small_config();
            c.align_mode = m;
            c.budget = 67;  // not a multiple of the batch size
            const auto before = oracle_calls_total();
            const RunResult r = run(c);
            const RunState& s = r.state;
            CHECK(s.oracle_calls_used == c.budget);
            CHECK(oracle_calls_total() - before == c.budget);
            CHECK(s.history.size() == c.budget);
            CHECK(s.init_calls + s.recenter_calls + s.query_calls == c.budget);
            if (m == AlignMode::Inversion) CHECK(s.recenter_calls == 0);
            for (std::size_t i = 0; i < s.history.size(); ++i) {
                CHECK(s.history[i].call_index == i + 1);
                if (i > 0) CHECK(s.history[i].best_so_far >= s.history[i - 1].best_so_far);
            }
            CHECK(s.best_score == s.history.back().best_so_far);
        }
    }

    TEST_CASE("query triplets are aligned and n_fail follows improvement") {
        RunConfig c = small_config();
        c.n_fail_limit = 1000;
        LboRun run(c, task_for(c));
        run.build_initial_dataset();
        for (int step = 0; step < 6 && !run.done(); ++step) {
            const double best = run.state().best_score;
            const int n_fail = run.state().n_fail;
            const std::size_t size = run.state().dataset.size();
            run.bo_step();
            const RunState& s = run.state();
            bool improved = false;
            for (std::size_t i = size; i < s.dataset.size(); ++i) {
                CHECK(decode_argmax(run.vae(), s.dataset[i].z) == s.dataset[i].x);
                CHECK(s.dataset[i].aligned);
                improved = improved || s.dataset[i].y > best;
            }
            CHECK(s.n_fail == (improved ? 0 : n_fail + 1));
        }
    }

    TEST_CASE("retraining fires once n_fail reaches the limit") {
        RunConfig c = small_config();
        c.n_fail_limit = 1;
        LboRun run(c, task_for(c));
        run.build_initial_dataset();
        while (!run.done() && run.state().n_fail < 1) run.bo_step();
        if (run.done()) return;
        const std::size_t retrains = run.state().vae_retrains;
        run.bo_step();
        CHECK(run.state().vae_retrains == retrains + 1);
    }

    TEST_CASE("exploration metric counts distinct sequences") {
        RunConfig c = small_config();
        const RunResult r = run(c);
        const auto m = exploration_metric(r.state.history);
        REQUIRE(m.size() == r.state.history.size());
        std::set<std::string> seen;
        CHECK(m.front() == 1);
        for (std::size_t i = 1; i < m.size(); ++i) {
            CHECK(m[i] >= m[i - 1]);
            CHECK(m[i] - m[i - 1] <= 1);
            CHECK(m[i] <= i + 1);
        }
    }

    TEST_CASE("same seed gives identical histories") {
        const RunConfig c = small_config(9);
        const RunResult a = run(c), b = run(c);
        CHECK(history_csv(a.state.history) == history_csv(b.state.history));
        CHECK(summary_json(c, a.state, nullptr) == summary_json(c, b.state, nullptr));
        const RunResult other = run(small_config(10));
        CHECK(history_csv(a.state.history) != history_csv(other.state.history));
    }

    TEST_CASE("history csv format") {
        HistoryRecord r;
        r.call_index = 1;
        r.y = 0.5;
        r.best_so_far = 0.5;
        r.unique_count = 1;
        r.tr_length = 0.8;
        r.phase = Phase::Init;
        const std::string csv = history_csv({r});
        CHECK(csv.rfind("call_index,y,best_so_far,unique_count,tr_length,n_fail,phase\n", 0) == 0);
        CHECK(csv.find('\r') == std::string::npos);
        CHECK(csv.find("1,0.5,0.5,1,0.80000000000000004,0,init\n") != std::string::npos);
    }
}
