#include <doctest.h>

#include <cmath>
#include <vector>

#include "rctodds/errors.hpp"
#include "rctodds/estimators.hpp"
#include "rctodds/rng.hpp"

using namespace rctodds;

namespace {

FitResult converged_fit(const Beta& beta, Link link = Link::logit) {
    FitResult fit;
    fit.beta = beta;
    fit.link = link;
    fit.converged = true;
    return fit;
}

FitData synthetic_data(Rng& rng, int n, double b2_true) {
    std::vector<FitRow> rows;
    rows.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int x = rng.uniform01() < 0.5 ? 1 : 0;
        const double z = rng.uniform01() * 2.0;
        const double eta = -0.4 + b2_true * x + 0.9 * z;
        const double p = 1.0 / (1.0 + std::exp(-eta));
        rows.push_back({x, z, rng.uniform01() < p ? 1 : 0, 1.0});
    }
    return FitData{std::move(rows)};
}

}  // namespace

TEST_CASE("plug_in at beta = 0 is the trivial half-half triple") {
    const PlugInResult r =
        plug_in(converged_fit({0, 0, 0}), {0.1, 0.5, 0.9, 1.4});
    CHECK(r.triple.alpha_t == doctest::Approx(0.5));
    CHECK(r.triple.alpha_c == doctest::Approx(0.5));
    CHECK(r.triple.delta == doctest::Approx(0.0));
    CHECK(!r.probit_contrast.has_value());
}

TEST_CASE("plug_in collapses to the coefficient when the covariate is inert") {
    // b3 = 0: predicted probabilities do not depend on z, so the plug-in
    // delta is exactly b2.
    const PlugInResult r =
        plug_in(converged_fit({-0.7, 1.3, 0.0}), {0.0, 0.3, 0.8, 2.0, 5.0});
    CHECK(r.triple.delta == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("plug_in with probit link reports the quantile-scale contrast") {
    const PlugInResult r =
        plug_in(converged_fit({0.2, 0.5, -0.3}, Link::probit), {0.0, 1.0, 2.0});
    REQUIRE(r.probit_contrast.has_value());
    // with no covariate spread in eta direction the contrast is near b2 but
    // not equal; just check the sign and sanity here
    CHECK(*r.probit_contrast > 0.0);
    CHECK(r.triple.alpha_t > r.triple.alpha_c);
}

TEST_CASE("plug_in requires a converged fit") {
    FitResult fit = converged_fit({0, 0, 0});
    fit.converged = false;
    CHECK_THROWS_AS(plug_in(fit, {0.0, 1.0}), Error);
}

TEST_CASE("itt hand example") {
    // treated responses (1,0,1,1), control (1,0,0,0)
    Assignment a{{1, 1, 1, 1, 0, 0, 0, 0}, 4};
    const std::vector<int> y = {1, 0, 1, 1, 1, 0, 0, 0};
    const EstimateTriple t = itt(y, a);
    CHECK(t.alpha_t == doctest::Approx(0.75));
    CHECK(t.alpha_c == doctest::Approx(0.25));
    CHECK(t.delta == doctest::Approx(2.0 * std::log(3.0)));
}

TEST_CASE("itt on identical arm responses is zero") {
    Assignment a{{1, 1, 0, 0}, 2};
    const EstimateTriple t = itt({1, 0, 1, 0}, a);
    CHECK(t.delta == doctest::Approx(0.0));
}

TEST_CASE("itt degenerate cells are errors") {
    Assignment a{{1, 1, 0, 0}, 2};
    CHECK_THROWS_AS(itt({1, 1, 1, 0}, a), DegenerateParameter);
    CHECK_THROWS_AS(itt({1, 0, 0, 0}, a), DegenerateParameter);
    Assignment empty_arm{{1, 1, 1, 1}, 4};
    CHECK_THROWS_AS(itt({1, 0, 1, 0}, empty_arm), Error);
}

TEST_CASE("coefficient_delta is a verbatim projection") {
    const FitResult fit = converged_fit({0.1, -2.25, 3.5});
    CHECK(coefficient_delta(fit) == -2.25);
}

TEST_CASE("first balance condition: plug-in matches ITT") {
    // Identical multisets of z in the two arms: pair subjects with equal z,
    // one per arm. Plug-in and ITT fractions then agree up to MLE tolerance.
    Rng rng(71);
    std::vector<FitRow> rows;
    Assignment a;
    std::vector<double> zs;
    std::vector<int> ys;
    for (int i = 0; i < 15; ++i) {
        const double z = rng.uniform01() * 2.0;
        for (int x : {1, 0}) {
            const double eta = -0.5 + 1.2 * x + 0.8 * z;
            const int y = rng.uniform01() < 1.0 / (1.0 + std::exp(-eta));
            rows.push_back({x, z, y, 1.0});
            a.x.push_back(x);
            if (x) ++a.n_t;
            zs.push_back(z);
            ys.push_back(y);
        }
    }
    FitOptions opts;
    opts.tol_per_row = 1e-12;
    const FitResult fit = fit_mle(FitData{std::move(rows)}, Link::logit, opts);
    REQUIRE(fit.converged);
    const PlugInResult plug = plug_in(fit, zs);
    const EstimateTriple hat = itt(ys, a);
    CHECK(std::abs(plug.triple.alpha_t - hat.alpha_t) <= 1e-8);
    CHECK(std::abs(plug.triple.alpha_c - hat.alpha_c) <= 1e-8);
    CHECK(std::abs(plug.triple.delta - hat.delta) <= 1e-8);
}

TEST_CASE("deltas are antisymmetric under arm relabeling") {
    Rng rng(73);
    const FitData data = synthetic_data(rng, 80, 1.0);
    std::vector<FitRow> flipped = data.rows();
    Assignment a, a_flip;
    std::vector<double> zs;
    std::vector<int> ys;
    for (FitRow& r : flipped) {
        a.x.push_back(r.x);
        if (r.x) ++a.n_t;
        zs.push_back(r.z);
        ys.push_back(r.y);
        r.x = 1 - r.x;
        a_flip.x.push_back(r.x);
        if (r.x) ++a_flip.n_t;
    }
    FitOptions opts;
    opts.tol_per_row = 1e-12;
    const FitResult f1 = fit_mle(data, Link::logit, opts);
    const FitResult f2 = fit_mle(FitData{std::move(flipped)}, Link::logit, opts);
    const double d1 = plug_in(f1, zs).triple.delta;
    const double d2 = plug_in(f2, zs).triple.delta;
    CHECK(d1 == doctest::Approx(-d2).epsilon(1e-7));
    const EstimateTriple i1 = itt(ys, a);
    const EstimateTriple i2 = itt(ys, a_flip);
    CHECK(i1.delta == doctest::Approx(-i2.delta));
}

TEST_CASE("coefficient overshoots the plug-in delta away from zero") {
    // Pooling inequality applied to fitted probabilities: with a varying
    // covariate and nonzero b3, b2 > 0 implies b2 > plug-in delta, and
    // mirrored for b2 < 0.
    Rng rng(79);
    int checked = 0;
    while (checked < 60) {
        const double b2_true = (checked % 2 ? 1.5 : -1.5);
        const FitData data = synthetic_data(rng, 60, b2_true);
        FitResult fit;
        try {
            fit = fit_mle(data, Link::logit);
        } catch (const Error&) {
            continue;
        }
        if (fit.beta.b2 == 0.0 || fit.beta.b3 == 0.0) continue;
        std::vector<double> zs;
        for (const FitRow& r : data.rows()) zs.push_back(r.z);
        const double delta = plug_in(fit, zs).triple.delta;
        if (fit.beta.b2 > 0.0) {
            CHECK(fit.beta.b2 > delta);
        } else {
            CHECK(fit.beta.b2 < delta);
        }
        ++checked;
    }
}
