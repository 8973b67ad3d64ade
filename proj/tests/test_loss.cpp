#include <doctest.h>

#include <cmath>

#include "jsd/loss.hpp"
#include "jsd/rng.hpp"
#include "test_util.hpp"

using namespace jsd;

namespace {

LossSpec js_spec(double pi1, ZMode z = ZMode::Normalized) {
    LossSpec s;
    s.kind = LossKind::JS;
    s.pi1 = pi1;
    s.z_mode = z;
    return s;
}

LossSpec gjs_spec(double pi1, int m, ZMode z = ZMode::Normalized) {
    LossSpec s;
    s.kind = LossKind::GJS;
    s.pi1 = pi1;
    s.num_dists = m;
    s.z_mode = z;
    return s;
}

LossSpec kind_spec(LossKind kind) {
    LossSpec s;
    s.kind = kind;
    return s;
}

// Loss as a function of raw per-slot logits, through the same clamped-softmax
// path the analytic gradients assume.
double loss_from_raw(const LossSpec& spec, std::size_t y,
                     const std::vector<std::vector<double>>& zs_raw) {
    std::vector<ProbVec> preds;
    preds.reserve(zs_raw.size());
    for (const auto& z : zs_raw)
        preds.push_back(clamp_project(softmax(LogitVec(z)).values()));
    return loss_value(spec, y, preds);
}

void check_grad_against_fd(const LossSpec& spec, std::size_t y,
                           const std::vector<LogitVec>& zs, double tol = 1e-7) {
    std::vector<std::vector<double>> raw;
    for (const auto& z : zs) raw.push_back(z.values());
    auto grads = grad_loss_logits(spec, y, zs);
    REQUIRE(grads.size() == zs.size());
    for (std::size_t v = 0; v < zs.size(); ++v) {
        for (std::size_t i = 0; i < zs[v].size(); ++i) {
            auto f = [&](const std::vector<double>& zp) {
                auto r = raw;
                r[v] = zp;
                return loss_from_raw(spec, y, r);
            };
            double fd = testutil::fd_partial(f, raw[v], i);
            CHECK(testutil::rel_err(grads[v][i], fd) <= tol);
        }
    }
}

}  // namespace

TEST_CASE("z_factor matches the entropy normalizer") {
    CHECK(z_factor(js_spec(0.5)) == doctest::Approx(0.34657359027997264).epsilon(1e-15));
    CHECK(z_factor(gjs_spec(1.0 / 3, 3)) ==
          doctest::Approx(0.27031007207210959).epsilon(1e-15));
    CHECK(z_factor(js_spec(0.5, ZMode::Unit)) == 1.0);
    CHECK(z_factor(kind_spec(LossKind::CE)) == 1.0);
}

TEST_CASE("loss kind names round trip") {
    const LossKind kinds[] = {LossKind::JS,  LossKind::GJS, LossKind::JSOnMean,
                              LossKind::CE,  LossKind::MAE, LossKind::GCE,
                              LossKind::LS,  LossKind::BS};
    for (LossKind k : kinds) CHECK(loss_kind_from_name(loss_kind_name(k)) == k);
    CHECK(loss_kind_name(LossKind::JSOnMean) == "JS-on-mean");
    CHECK_THROWS_AS(loss_kind_from_name("focal"), ValidationError);
}

TEST_CASE("prediction_count per kind") {
    CHECK(prediction_count(js_spec(0.5)) == 1);
    CHECK(prediction_count(gjs_spec(0.3, 4)) == 3);
    LossSpec jm = gjs_spec(0.3, 3);
    jm.kind = LossKind::JSOnMean;
    CHECK(prediction_count(jm) == 2);
    CHECK(prediction_count(kind_spec(LossKind::MAE)) == 1);
}

TEST_CASE("validate rejects out-of-range parameters") {
    CHECK_THROWS_AS(validate(js_spec(0.0)), ValidationError);
    CHECK_THROWS_AS(validate(js_spec(1.0)), ValidationError);
    CHECK_THROWS_AS(validate(gjs_spec(0.5, 1)), ValidationError);
    LossSpec jm = gjs_spec(0.5, 2);
    jm.kind = LossKind::JSOnMean;
    CHECK_THROWS_AS(validate(jm), ValidationError);
    LossSpec gce = kind_spec(LossKind::GCE);
    gce.gce_q = 0.0;
    CHECK_THROWS_AS(validate(gce), ValidationError);
    LossSpec ls = kind_spec(LossKind::LS);
    ls.ls_epsilon = 1.0;
    CHECK_THROWS_AS(validate(ls), ValidationError);
    LossSpec bs = kind_spec(LossKind::BS);
    bs.bs_beta = 0.0;
    CHECK_THROWS_AS(validate(bs), ValidationError);
}

TEST_CASE("loss_weights shape") {
    WeightVec w = loss_weights(gjs_spec(0.4, 4));
    REQUIRE(w.size() == 4);
    CHECK(w[0] == doctest::Approx(0.4).epsilon(1e-15));
    for (std::size_t i = 1; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("JS loss reference values") {
    LossSpec s = js_spec(0.5);
    CHECK(loss_js(s, 0, ProbVec::uniform(2)) ==
          doctest::Approx(0.6225562489182657).epsilon(1e-14));
    CHECK(loss_js(s, 0, ProbVec::one_hot(2, 1)) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(loss_js(s, 0, ProbVec::one_hot(2, 0)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(loss_js(s, 2, ProbVec::uniform(2)), InvalidLabel);
    CHECK_THROWS_AS(loss_js(kind_spec(LossKind::CE), 0, ProbVec::uniform(2)),
                    ValidationError);
}

TEST_CASE("GJS loss reference value and M=2 reduction") {
    LossSpec g = gjs_spec(1.0 / 3, 3);
    std::vector<ProbVec> preds{ProbVec::one_hot(3, 1), ProbVec::one_hot(3, 2)};
    CHECK(loss_gjs(g, 0, preds) == doctest::Approx(4.0642669370271822).epsilon(1e-13));

    Rng rng = make_rng(13, "gjs-m2");
    for (int t = 0; t < 100; ++t) {
        double pi1 = 0.1 + 0.8 * (static_cast<double>(rng() % 1000) / 1000.0);
        ProbVec p = testutil::random_prob(rng, 4);
        std::size_t y = rng() % 4;
        CHECK(loss_gjs(gjs_spec(pi1, 2), y, {p}) ==
              doctest::Approx(loss_js(js_spec(pi1), y, p)).epsilon(1e-14));
    }
}

TEST_CASE("GJS dominates its JS-on-mean term") {
    Rng rng = make_rng(13, "gjs-vs-mean");
    for (int t = 0; t < 100; ++t) {
        double pi1 = 0.1 + 0.8 * (static_cast<double>(rng() % 1000) / 1000.0);
        int m = 3 + static_cast<int>(rng() % 3);
        LossSpec g = gjs_spec(pi1, m);
        LossSpec jm = g;
        jm.kind = LossKind::JSOnMean;
        std::size_t y = rng() % 3;
        std::vector<ProbVec> preds;
        for (int v = 0; v + 1 < m; ++v) preds.push_back(testutil::random_prob(rng, 3));
        double full = loss_gjs(g, y, preds);
        double mean_part = loss_js_on_mean(jm, y, preds);
        CHECK(full >= mean_part - 1e-12);
        // Agreeing predictions close the gap.
        std::vector<ProbVec> same(static_cast<std::size_t>(m - 1), preds.front());
        CHECK(loss_gjs(g, y, same) ==
              doctest::Approx(loss_js_on_mean(jm, y, same)).epsilon(1e-11));
    }
}

TEST_CASE("baseline loss values") {
    CHECK(loss_baseline(kind_spec(LossKind::CE), 1, ProbVec::uniform(4)) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
    ProbVec p({0.1, 0.6, 0.3});
    CHECK(loss_baseline(kind_spec(LossKind::MAE), 1, p) ==
          doctest::Approx(0.4).epsilon(1e-14));
    CHECK(loss_baseline(kind_spec(LossKind::GCE), 2, ProbVec::uniform(4)) ==
          doctest::Approx(0.887244083389143542).epsilon(1e-14));

    LossSpec gce1 = kind_spec(LossKind::GCE);
    gce1.gce_q = 1.0;
    CHECK(loss_baseline(gce1, 1, p) == doctest::Approx(0.4).epsilon(1e-13));

    LossSpec ls0 = kind_spec(LossKind::LS);
    ls0.ls_epsilon = 0.0;
    CHECK(loss_baseline(ls0, 0, p) == doctest::Approx(-std::log(0.1)).epsilon(1e-13));

    LossSpec bs1 = kind_spec(LossKind::BS);
    bs1.bs_beta = 1.0;
    CHECK(loss_baseline(bs1, 0, p) == doctest::Approx(-std::log(0.1)).epsilon(1e-13));
}

TEST_CASE("smoothed targets") {
    ProbVec t = ls_target(kind_spec(LossKind::LS), 1, 4);
    CHECK(t[0] == doctest::Approx(0.025).epsilon(1e-14));
    CHECK(t[1] == doctest::Approx(0.925).epsilon(1e-14));

    ProbVec b = bs_target(kind_spec(LossKind::BS), 0, ProbVec::uniform(2));
    CHECK(b[0] == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(b[1] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("sum over classes is exactly K-1 for MAE") {
    Rng rng = make_rng(13, "mae-sum");
    for (int t = 0; t < 50; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 6);
        ProbVec p = testutil::random_prob(rng, k);
        CHECK(sum_over_classes(kind_spec(LossKind::MAE), {p}) ==
              doctest::Approx(static_cast<double>(k - 1)).epsilon(1e-13));
    }
}

TEST_CASE("closed-form JS gradient reference value") {
    LogitVec g = grad_js_logits(js_spec(0.5), 0, LogitVec({0.0, 0.0}));
    CHECK(g[0] == doctest::Approx(-0.39624062518028905).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(0.39624062518028905).epsilon(1e-14));
}

TEST_CASE("closed-form and generic JS gradients agree") {
    Rng rng = make_rng(13, "js-grad-paths");
    for (int t = 0; t < 200; ++t) {
        std::size_t k = 2 + static_cast<std::size_t>(rng() % 5);
        double pi1 = 0.05 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0);
        LossSpec s = js_spec(pi1, (t % 2 == 0) ? ZMode::Normalized : ZMode::Unit);
        std::size_t y = rng() % k;
        LogitVec z = testutil::random_logits(rng, k);
        LogitVec closed = grad_js_logits(s, y, z);
        auto generic = grad_loss_logits(s, y, {z});
        for (std::size_t i = 0; i < k; ++i)
            CHECK(testutil::rel_err(closed[i], generic[0][i]) <= 1e-12);
    }
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng = make_rng(13, "fd");
    const std::size_t k = 4;

    SUBCASE("JS") {
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(js_spec(0.3), rng() % k,
                                  {testutil::random_logits(rng, k)});
    }
    SUBCASE("GJS M=3") {
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(
                gjs_spec(0.5, 3), rng() % k,
                {testutil::random_logits(rng, k), testutil::random_logits(rng, k)});
    }
    SUBCASE("JS-on-mean M=3") {
        LossSpec jm = gjs_spec(0.4, 3);
        jm.kind = LossKind::JSOnMean;
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(
                jm, rng() % k,
                {testutil::random_logits(rng, k), testutil::random_logits(rng, k)});
    }
    SUBCASE("CE") {
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(kind_spec(LossKind::CE), rng() % k,
                                  {testutil::random_logits(rng, k)});
    }
    SUBCASE("MAE") {
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(kind_spec(LossKind::MAE), rng() % k,
                                  {testutil::random_logits(rng, k)});
    }
    SUBCASE("GCE") {
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(kind_spec(LossKind::GCE), rng() % k,
                                  {testutil::random_logits(rng, k)});
    }
    SUBCASE("LS") {
        for (int t = 0; t < 20; ++t)
            check_grad_against_fd(kind_spec(LossKind::LS), rng() % k,
                                  {testutil::random_logits(rng, k)});
    }
}

TEST_CASE("bootstrapped gradient matches FD with the target frozen") {
    Rng rng = make_rng(13, "bs-fd");
    LossSpec bs = kind_spec(LossKind::BS);
    for (int t = 0; t < 20; ++t) {
        std::size_t y = rng() % 4;
        LogitVec z = testutil::random_logits(rng, 4);
        ProbVec frozen = bs_target(bs, y, clamp_project(softmax(z).values()));
        auto f = [&](const std::vector<double>& zp) {
            return cross_entropy_against(frozen,
                                         clamp_project(softmax(LogitVec(zp)).values()));
        };
        auto g = grad_loss_logits(bs, y, {z});
        for (std::size_t i = 0; i < 4; ++i) {
            double fd = testutil::fd_partial(f, z.values(), i);
            CHECK(testutil::rel_err(g[0][i], fd) <= 1e-7);
        }
    }
}

TEST_CASE("eval_loss bundles value and gradients consistently") {
    LossSpec g = gjs_spec(0.5, 3);
    Rng rng = make_rng(13, "eval");
    std::vector<LogitVec> zs{testutil::random_logits(rng, 3),
                             testutil::random_logits(rng, 3)};
    LossEval ev = eval_loss(g, 1, zs);
    std::vector<ProbVec> preds{clamp_project(softmax(zs[0]).values()),
                               clamp_project(softmax(zs[1]).values())};
    CHECK(ev.value == doctest::Approx(loss_gjs(g, 1, preds)).epsilon(1e-15));
    REQUIRE(ev.grad_logits.size() == 2);
    auto direct = grad_loss_logits(g, 1, zs);
    for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(ev.grad_logits[v][i] == doctest::Approx(direct[v][i]).epsilon(1e-15));
}

TEST_CASE("dissection target structure") {
    DissectionSpec d;
    ProbVec t = dissection_target(d, 0, 3);
    CHECK(t[0] == doctest::Approx(0.9998).epsilon(1e-12));
    CHECK(t[1] == doctest::Approx(1e-4).epsilon(1e-12));

    DissectionSpec exact;
    exact.label_floor = 0.0;
    ProbVec e = dissection_target(exact, 1, 3);
    CHECK(e[1] == 1.0);

    DissectionSpec wide;
    wide.label_floor = 0.4;
    CHECK_THROWS_AS(dissection_target(wide, 0, 5), ValidationError);
}

TEST_CASE("dissection values against reference numbers") {
    DissectionSpec d;
    const ProbVec u = ProbVec::uniform(3);
    d.kind = DivergenceKind::KL;
    CHECK(dissection_value(d, 0, u) == doctest::Approx(1.0965702405950479).epsilon(1e-13));
    d.kind = DivergenceKind::KLReverse;
    CHECK(dissection_value(d, 0, u) == doctest::Approx(5.0416812993169012).epsilon(1e-13));
    d.kind = DivergenceKind::Jeffreys;
    CHECK(dissection_value(d, 0, u) == doctest::Approx(3.0691257699559745).epsilon(1e-13));
    d.kind = DivergenceKind::K;
    CHECK(dissection_value(d, 0, u) == doctest::Approx(0.40385024016519969).epsilon(1e-13));
    d.kind = DivergenceKind::KPrime;
    CHECK(dissection_value(d, 0, u) == doctest::Approx(0.23089909393102483).epsilon(1e-13));
    d.kind = DivergenceKind::JS;
    CHECK(dissection_value(d, 0, u) == doctest::Approx(0.31737466704811226).epsilon(1e-13));

    DissectionSpec exact;
    exact.label_floor = 0.0;
    exact.kind = DivergenceKind::KLReverse;
    CHECK_THROWS_AS(dissection_value(exact, 0, u), AbsoluteContinuityViolation);
}

TEST_CASE("dissection gradients match finite differences") {
    Rng rng = make_rng(13, "dissect-fd");
    const DivergenceKind kinds[] = {DivergenceKind::KL, DivergenceKind::KLReverse,
                                    DivergenceKind::Jeffreys, DivergenceKind::K,
                                    DivergenceKind::KPrime, DivergenceKind::JS};
    for (DivergenceKind kind : kinds) {
        DissectionSpec d;
        d.kind = kind;
        for (int t = 0; t < 10; ++t) {
            std::size_t y = rng() % 4;
            LogitVec z = testutil::random_logits(rng, 4);
            LogitVec g = grad_dissection_logits(d, y, z);
            auto f = [&](const std::vector<double>& zp) {
                return dissection_value(d, y,
                                        clamp_project(softmax(LogitVec(zp)).values()));
            };
            for (std::size_t i = 0; i < 4; ++i) {
                double fd = testutil::fd_partial(f, z.values(), i);
                CHECK(testutil::rel_err(g[i], fd) <= 1e-7);
            }
        }
    }
}

TEST_CASE("train loss factories") {
    auto gjs = make_train_loss(gjs_spec(0.5, 3));
    CHECK(gjs->name() == "GJS");
    CHECK(gjs->prediction_count() == 2);
    std::vector<ProbVec> preds{ProbVec::uniform(3), ProbVec({0.2, 0.5, 0.3})};
    CHECK(gjs->value(0, preds) ==
          doctest::Approx(loss_gjs(gjs_spec(0.5, 3), 0, preds)).epsilon(1e-15));

    DissectionSpec d;
    d.kind = DivergenceKind::Jeffreys;
    auto dl = make_train_loss(d);
    CHECK(dl->name() == "dissect-Jeffreys");
    CHECK(dl->prediction_count() == 1);
    CHECK(dl->value(1, {ProbVec::uniform(4)}) ==
          doctest::Approx(dissection_value(d, 1, ProbVec::uniform(4))).epsilon(1e-15));
}
