#include <cmath>

#include "doctest.h"
#include "sgdkit/lr.hpp"

using namespace sgdkit;

TEST_CASE("adaptive rule on a curvature-2 probe") {
    // F(x) = 1/2 ||x||^2 at x=(2,0): g = x, g_probe = 2x
    const AdaptiveLrStep r = adaptive_lr({2.0, 0.0}, {4.0, 0.0}, 4, 0.123);
    CHECK(!r.guarded);
    CHECK(r.alpha == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("adaptive rule closed form 1/(sqrt(bh)(1+a))") {
    // quadratic with curvature a=0.5 at x=2: g=1, probe gradient 1.5
    const AdaptiveLrStep r = adaptive_lr({1.0}, {1.5}, 1, 0.5);
    CHECK(!r.guarded);
    CHECK(r.alpha == doctest::Approx(1.0 / 1.5).epsilon(1e-15));

    RngState rng(3);
    for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        for (std::size_t bh : {1u, 4u, 100u}) {
            ParamVector x(5);
            for (auto& v : x) v = rng.uniform(-3.0, 3.0);
            ParamVector g(5), gp(5);
            for (std::size_t i = 0; i < 5; ++i) {
                g[i] = a * x[i];
                gp[i] = a * (1.0 + a) * x[i];
            }
            const AdaptiveLrStep step = adaptive_lr(g, gp, bh, 1.0);
            CHECK(!step.guarded);
            CHECK(std::abs(step.alpha - 1.0 / (std::sqrt(double(bh)) * (1.0 + a))) <= 1e-12);
        }
    }
}

TEST_CASE("adaptive rule guards degenerate inputs") {
    const AdaptiveLrStep zero_g = adaptive_lr({0.0, 0.0}, {1.0, 0.0}, 4, 0.75);
    CHECK(zero_g.guarded);
    CHECK(zero_g.alpha == 0.75);

    const AdaptiveLrStep neg = adaptive_lr({1.0}, {-1.0}, 1, 0.5);
    CHECK(neg.guarded);
    CHECK(neg.alpha == 0.5);

    CHECK_THROWS_AS(adaptive_lr({1.0}, {1.0, 2.0}, 1, 0.5), ShapeError);
    CHECK_THROWS_AS(adaptive_lr({1.0}, {1.0}, 0, 0.5), ConfigError);
}

TEST_CASE("adaptive output decreases strictly in the probe curvature") {
    const ParamVector g{0.3, -1.2, 0.7};
    double prev = 1e300;
    for (double c : {0.1, 0.5, 1.0, 2.0, 5.0, 25.0}) {
        ParamVector gp(g);
        scale(gp, c);
        const AdaptiveLrStep r = adaptive_lr(g, gp, 16, 1.0);
        CHECK(!r.guarded);
        CHECK(r.alpha < prev);
        prev = r.alpha;
    }
}

TEST_CASE("adaptive output is at least 1/sqrt(bh) whenever 0 < <gp,g> <= ||g||^2") {
    RngState rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        ParamVector g(4);
        for (auto& v : g) v = rng.uniform(-2.0, 2.0);
        if (squared_norm(g) < 1e-6) continue;
        const double ratio = rng.next_double();  // scale in (0,1]
        if (ratio <= 0.0) continue;
        ParamVector gp(g);
        scale(gp, ratio);
        const std::size_t bh = 1 + rng.bounded(64);
        const AdaptiveLrStep r = adaptive_lr(g, gp, bh, 1.0);
        if (r.guarded) continue;
        CHECK(r.alpha >= 1.0 / std::sqrt(double(bh)) - 1e-12);
    }
}

TEST_CASE("adaptive output is capped at 10/sqrt(bh)") {
    const AdaptiveLrStep r = adaptive_lr({1.0}, {1e-3}, 4, 1.0);
    CHECK(!r.guarded);
    CHECK(r.capped);
    CHECK(r.alpha == doctest::Approx(10.0 / 2.0));
}

TEST_CASE("diminishing schedule") {
    CHECK(diminishing_lr(0.1, 0) == doctest::Approx(0.1));
    CHECK(diminishing_lr(0.1, 9) == doctest::Approx(0.01));
    CHECK_THROWS_AS(diminishing_lr(-1.0, 0), ConfigError);
    CHECK_THROWS_AS(diminishing_lr(0.0, 3), ConfigError);
}

TEST_CASE("bb step on a hand-evaluated secant pair") {
    const ParamVector x_t{1.0, 0.0}, x_prev{0.0, 0.0};
    const ParamVector g_t{2.0, 0.0}, g_prev{0.0, 0.0};
    auto r = bb_lr(x_t, x_prev, g_t, g_prev, 1.0, 1);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(0.5));
    r = bb_lr(x_t, x_prev, g_t, g_prev, 2.0, 1);
    CHECK(*r == doctest::Approx(1.0));
}

TEST_CASE("bb signals degenerate displacements and curvature") {
    const ParamVector same{1.0, 1.0};
    CHECK(!bb_lr(same, same, {1.0, 0.0}, {0.0, 0.0}, 1.0, 1).has_value());
    // negative curvature estimate
    CHECK(!bb_lr({1.0}, {0.0}, {-1.0}, {0.0}, 1.0, 1).has_value());
    CHECK_THROWS_AS(bb_lr({1.0}, {0.0}, {1.0}, {0.0}, 0.0, 1), ConfigError);
}

TEST_CASE("bb depends only on iterate differences") {
    RngState rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        ParamVector x(3), xp(3), g(3), gp(3), shift(3);
        for (auto* v : {&x, &xp, &g, &gp, &shift})
            for (auto& e : *v) e = rng.uniform(-2.0, 2.0);
        const auto base = bb_lr(x, xp, g, gp, 1.5, 8);
        ParamVector xs(x), xps(xp);
        axpy(1.0, shift, xs);
        axpy(1.0, shift, xps);
        const auto moved = bb_lr(xs, xps, g, gp, 1.5, 8);
        CHECK(base.has_value() == moved.has_value());
        if (base && moved) CHECK(*base == doctest::Approx(*moved).epsilon(1e-9));
    }
}

TEST_CASE("polyak step") {
    auto r = polyak_lr(2.0, 0.0, 4.0, 1.0);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(0.5));
    CHECK(*polyak_lr(1.0, 1.0, 4.0, 1.0) == 0.0);
    CHECK(!polyak_lr(1.0, 0.0, 0.0, 1.0).has_value());
    CHECK_THROWS_AS(polyak_lr(1.0, 0.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(polyak_lr(0.0, 1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("multiplicative rule with the reference constants") {
    const ParamVector agree_a{1.0, 0.0}, agree_b{0.5, 0.2};
    CHECK(multiplicative_lr(0.1, agree_a, agree_b, 0.95, 1.01) == doctest::Approx(0.101));
    const ParamVector oppose{-1.0, 0.0};
    CHECK(multiplicative_lr(0.1, agree_a, oppose, 0.95, 1.01) == doctest::Approx(0.095));
    CHECK_THROWS_AS(multiplicative_lr(0.0, agree_a, agree_b, 0.95, 1.01), ConfigError);
    CHECK_THROWS_AS(multiplicative_lr(0.1, agree_a, agree_b, 1.5, 1.01), ConfigError);
    CHECK_THROWS_AS(multiplicative_lr(0.1, agree_a, agree_b, 0.95, 0.5), ConfigError);
}

TEST_CASE("controller falls back to 1/(2 sqrt(bh)) before any emission") {
    LrConfig cfg;
    cfg.kind = LrKind::adaptive;
    LrController ctl(cfg, 8, 16);
    const ParamVector zero{0.0}, one{1.0};
    LrController::Inputs in;
    in.g_bh = &zero;
    in.g_probe = &one;
    const auto first = ctl.next(in);
    CHECK(first.guarded);
    CHECK(first.alpha == doctest::Approx(0.5 / 4.0));

    // a good step, then a guarded one repeats its LR
    in.g_bh = &one;
    const auto good = ctl.next(in);
    CHECK(!good.guarded);
    in.g_bh = &zero;
    const auto repeat = ctl.next(in);
    CHECK(repeat.guarded);
    CHECK(repeat.alpha == good.alpha);
    CHECK(ctl.guard_events() == 2);
}

TEST_CASE("every regime emits positive finite learning rates under fuzzing") {
    RngState rng(33);
    for (LrKind kind : {LrKind::adaptive, LrKind::constant, LrKind::diminishing, LrKind::bb,
                        LrKind::polyak, LrKind::multiplicative}) {
        LrConfig cfg;
        cfg.kind = kind;
        cfg.alpha = 0.05;
        cfg.c = 0.3;
        cfg.gamma = 1.2;
        cfg.alpha0 = 0.2;
        LrController ctl(cfg, 4, 9);
        ParamVector x_prev(3, 0.0);
        for (int t = 0; t < 200; ++t) {
            ParamVector g(3), gp(3), x(3), gprev(3);
            for (auto* v : {&g, &gp, &x, &gprev})
                for (auto& e : *v) e = rng.uniform(-2.0, 2.0);
            if (rng.next_double() < 0.1) g.assign(3, 0.0);  // force guard paths
            LrController::Inputs in;
            in.g_bh = &g;
            in.g_probe = &gp;
            in.x = &x;
            in.x_prev = t > 0 ? &x_prev : nullptr;
            in.g_bh_prev = t > 0 ? &gprev : nullptr;
            in.batch_loss = std::abs(rng.uniform(0.0, 3.0));
            in.g_batch = &g;
            const auto step = ctl.next(in);
            CHECK(step.alpha > 0.0);
            CHECK(std::isfinite(step.alpha));
            x_prev = x;
        }
    }
}
