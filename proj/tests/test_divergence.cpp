#include <doctest.h>

#include <cmath>

#include "jsd/divergence.hpp"
#include "jsd/rng.hpp"
#include "test_util.hpp"

using namespace jsd;

namespace {
const WeightVec kHalf({0.5, 0.5});
}

TEST_CASE("js_div matches hand-computed values") {
    CHECK(js_div(kHalf, ProbVec::one_hot(2, 0), ProbVec::uniform(2)) ==
          doctest::Approx(0.21576155433883570).epsilon(1e-15));
    // Disjoint one-hots peak at the weight entropy ln 2.
    CHECK(js_div(kHalf, ProbVec::one_hot(2, 0), ProbVec::one_hot(2, 1)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    ProbVec p({0.3, 0.7});
    CHECK(js_div(kHalf, p, p) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("js_div entropy form agrees with the weighted-KL form") {
    Rng rng = make_rng(11, "js-forms");
    for (int t = 0; t < 300; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 5);
        double pi1 = 0.05 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0);
        WeightVec w({pi1, 1.0 - pi1});
        ProbVec a = testutil::random_prob(rng, k);
        ProbVec b = testutil::random_prob(rng, k);
        double ent = js_div(w, a, b);
        double klf = js_div_kl_form(w, a, b);
        CHECK(std::fabs(ent - klf) <= 1e-12);
        CHECK(ent >= -1e-15);
    }
}

TEST_CASE("js_div weight asymmetry transposes correctly") {
    WeightVec w({0.3, 0.7});
    WeightVec wt({0.7, 0.3});
    ProbVec a({0.9, 0.1});
    ProbVec b({0.2, 0.8});
    CHECK(js_div(w, a, b) != doctest::Approx(js_div(w, b, a)).epsilon(1e-6));
    CHECK(js_div(w, a, b) == doctest::Approx(js_div(wt, b, a)).epsilon(1e-14));
}

TEST_CASE("gjs_div reduces to js_div at two distributions") {
    Rng rng = make_rng(11, "gjs-reduce");
    for (int t = 0; t < 100; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 4);
        double pi1 = 0.1 + 0.8 * (static_cast<double>(rng() % 1000) / 1000.0);
        WeightVec w({pi1, 1.0 - pi1});
        ProbVec a = testutil::random_prob(rng, k);
        ProbVec b = testutil::random_prob(rng, k);
        CHECK(gjs_div(w, {a, b}) == doctest::Approx(js_div(w, a, b)).epsilon(1e-15));
    }
}

TEST_CASE("gjs_div forms agree and respect the weight-entropy ceiling") {
    Rng rng = make_rng(11, "gjs-forms");
    for (int t = 0; t < 200; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 5);
        std::size_t m = 2 + static_cast<std::size_t>(rng() % 3);
        std::vector<double> raw(m);
        double sum = 0.0;
        for (auto& x : raw) {
            x = 0.05 + static_cast<double>(rng() % 1000) / 1000.0;
            sum += x;
        }
        for (auto& x : raw) x /= sum;
        WeightVec w(raw);
        std::vector<ProbVec> ps;
        for (std::size_t i = 0; i < m; ++i) ps.push_back(testutil::random_prob(rng, k));
        double ent = gjs_div(w, ps);
        CHECK(std::fabs(ent - gjs_div_kl_form(w, ps)) <= 1e-12);
        CHECK(ent >= -1e-15);
        double hw = 0.0;
        for (std::size_t i = 0; i < m; ++i) hw -= w[i] * std::log(w[i]);
        CHECK(ent <= hw + 1e-12);
    }
}

TEST_CASE("gjs_div attains the weight entropy on disjoint one-hots") {
    WeightVec w({0.2, 0.3, 0.5});
    std::vector<ProbVec> ps{ProbVec::one_hot(4, 0), ProbVec::one_hot(4, 1),
                            ProbVec::one_hot(4, 2)};
    double hw = -(0.2 * std::log(0.2) + 0.3 * std::log(0.3) + 0.5 * std::log(0.5));
    CHECK(gjs_div(w, ps) == doctest::Approx(hw).epsilon(1e-14));
}

TEST_CASE("k_div and k_prime_div") {
    CHECK(k_div(ProbVec::one_hot(2, 0), ProbVec::uniform(2)) ==
          doctest::Approx(0.28768207245178093).epsilon(1e-15));
    Rng rng = make_rng(11, "kkp");
    for (int t = 0; t < 100; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 5);
        ProbVec a = testutil::random_prob(rng, k);
        ProbVec b = testutil::random_prob(rng, k);
        // K and K' are the two halves of equal-weight JS.
        CHECK(std::fabs(0.5 * (k_div(a, b) + k_prime_div(a, b)) - js_div(kHalf, a, b)) <=
              1e-12);
        CHECK(k_div(a, b) == doctest::Approx(k_prime_div(b, a)).epsilon(1e-12));
        CHECK(k_div(a, b) <= std::log(2.0) + 1e-12);
        CHECK(k_prime_div(a, b) <= std::log(2.0) + 1e-12);
    }
    // K stays finite against a boundary distribution; K' of the same pair too.
    CHECK(std::isfinite(k_div(ProbVec::one_hot(3, 1), ProbVec::uniform(3))));
    CHECK(std::isfinite(k_prime_div(ProbVec::uniform(3), ProbVec::one_hot(3, 1))));
}

TEST_CASE("jeffreys_div symmetrizes KL") {
    ProbVec a({0.75, 0.25});
    ProbVec b({0.25, 0.75});
    CHECK(jeffreys_div(a, b) == doctest::Approx(0.54930614433405485).epsilon(1e-15));
    CHECK(jeffreys_div(a, b) == doctest::Approx(jeffreys_div(b, a)).epsilon(1e-15));
    CHECK_THROWS_AS(jeffreys_div(ProbVec::one_hot(2, 0), ProbVec::uniform(2)),
                    AbsoluteContinuityViolation);
}

TEST_CASE("divergence classification table") {
    struct Row {
        DivergenceKind kind;
        bool symmetric;
        bool bounded;
    };
    const Row rows[] = {
        {DivergenceKind::KL, false, false},     {DivergenceKind::KLReverse, false, false},
        {DivergenceKind::Jeffreys, true, false}, {DivergenceKind::K, false, true},
        {DivergenceKind::KPrime, false, true},  {DivergenceKind::JS, true, true},
        {DivergenceKind::GJS, true, true},
    };
    for (const auto& r : rows) {
        CHECK(divergence_symmetric(r.kind) == r.symmetric);
        CHECK(divergence_bounded(r.kind) == r.bounded);
        CHECK(divergence_from_name(divergence_name(r.kind)) == r.kind);
    }
    CHECK(divergence_name(DivergenceKind::KLReverse) == "KL-reverse");
    CHECK(divergence_name(DivergenceKind::KPrime) == "K-prime");
    CHECK_THROWS_AS(divergence_from_name("hellinger"), ValidationError);
}

TEST_CASE("pairwise_divergence dispatches to the named forms") {
    Rng rng = make_rng(11, "pairwise");
    ProbVec a = testutil::random_prob_floor(rng, 4, 1e-3);
    ProbVec b = testutil::random_prob_floor(rng, 4, 1e-3);
    CHECK(pairwise_divergence(DivergenceKind::KL, a, b) ==
          doctest::Approx(kl_div(a, b)).epsilon(1e-15));
    CHECK(pairwise_divergence(DivergenceKind::KLReverse, a, b) ==
          doctest::Approx(kl_div(b, a)).epsilon(1e-15));
    CHECK(pairwise_divergence(DivergenceKind::Jeffreys, a, b) ==
          doctest::Approx(jeffreys_div(a, b)).epsilon(1e-15));
    CHECK(pairwise_divergence(DivergenceKind::K, a, b) ==
          doctest::Approx(k_div(a, b)).epsilon(1e-15));
    CHECK(pairwise_divergence(DivergenceKind::KPrime, a, b) ==
          doctest::Approx(k_prime_div(a, b)).epsilon(1e-15));
    CHECK(pairwise_divergence(DivergenceKind::JS, a, b) ==
          doctest::Approx(js_div(kHalf, a, b)).epsilon(1e-15));
    CHECK_THROWS_AS(pairwise_divergence(DivergenceKind::GJS, a, b), ValidationError);
}

TEST_CASE("js_fgen reproduces js_div through the f-divergence sum") {
    Rng rng = make_rng(11, "fgen");
    for (int t = 0; t < 100; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 4);
        double pi1 = 0.1 + 0.8 * (static_cast<double>(rng() % 1000) / 1000.0);
        ProbVec p1 = testutil::random_prob_floor(rng, k, 1e-3);
        ProbVec p2 = testutil::random_prob_floor(rng, k, 1e-3);
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += p2[i] * js_fgen(pi1, p1[i] / p2[i]);
        CHECK(std::fabs(acc - js_div(WeightVec({pi1, 1.0 - pi1}), p1, p2)) <= 1e-12);
    }
}

TEST_CASE("js_fgen boundary and convexity") {
    double pi1 = 0.35;
    double h = -(1.0 - pi1) * std::log(1.0 - pi1);
    CHECK(js_fgen(pi1, 0.0) == doctest::Approx(h).epsilon(1e-14));
    CHECK(js_fgen(pi1, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
    Rng rng = make_rng(11, "fgen-convex");
    for (int t = 0; t < 200; ++t) {
        double a = 3.0 * (static_cast<double>(rng() % 10000) / 10000.0);
        double b = 3.0 * (static_cast<double>(rng() % 10000) / 10000.0);
        CHECK(js_fgen(pi1, 0.5 * (a + b)) <=
              0.5 * (js_fgen(pi1, a) + js_fgen(pi1, b)) + 1e-12);
    }
}

TEST_CASE("decompose_gjs splits the divergence exactly") {
    Rng rng = make_rng(11, "decomp");
    for (int t = 0; t < 100; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 4);
        std::size_t m = 3 + static_cast<std::size_t>(rng() % 3);
        double pi1 = 0.1 + 0.8 * (static_cast<double>(rng() % 1000) / 1000.0);
        std::vector<double> raw(m);
        raw[0] = pi1;
        for (std::size_t i = 1; i < m; ++i) raw[i] = (1.0 - pi1) / static_cast<double>(m - 1);
        WeightVec w(raw);
        std::size_t y = rng() % k;
        ProbVec label = ProbVec::one_hot(k, y);
        std::vector<ProbVec> preds;
        for (std::size_t i = 0; i + 1 < m; ++i) preds.push_back(testutil::random_prob(rng, k));

        auto parts = decompose_gjs(w, label, preds);
        std::vector<ProbVec> all;
        all.push_back(label);
        for (const auto& p : preds) all.push_back(p);
        CHECK(std::fabs(parts.js_term + parts.consistency_term - gjs_div(w, all)) <= 1e-12);
        CHECK(parts.js_term >= -1e-15);
        CHECK(parts.consistency_term >= -1e-15);
    }
}

TEST_CASE("decompose_gjs consistency term vanishes for agreeing predictions") {
    WeightVec w({0.4, 0.3, 0.3});
    ProbVec p({0.2, 0.5, 0.3});
    auto parts = decompose_gjs(w, ProbVec::one_hot(3, 0), {p, p});
    CHECK(std::fabs(parts.consistency_term) <= 1e-14);
    CHECK(parts.js_term ==
          doctest::Approx(js_div(WeightVec({0.4, 0.6}), ProbVec::one_hot(3, 0), p))
              .epsilon(1e-13));
}

TEST_CASE("decompose_gjs validates its arguments") {
    WeightVec w2({0.5, 0.5});
    CHECK_THROWS_AS(decompose_gjs(w2, ProbVec::one_hot(2, 0), {ProbVec::uniform(2)}),
                    ValidationError);
    WeightVec w3({0.4, 0.3, 0.3});
    CHECK_THROWS_AS(
        decompose_gjs(w3, ProbVec::uniform(3), {ProbVec::uniform(3), ProbVec::uniform(3)}),
        ValidationError);
    CHECK_THROWS_AS(decompose_gjs(w3, ProbVec::one_hot(3, 0), {ProbVec::uniform(3)}),
                    ValidationError);
}
