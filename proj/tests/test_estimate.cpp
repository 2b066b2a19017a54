#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "fixtures.hpp"
#include "gmmlor/error.hpp"
#include "gmmlor/estimate.hpp"
#include "gmmlor/fit.hpp"
#include "gmmlor/metrics.hpp"
#include "gmmlor/projection.hpp"
#include "gmmlor/simulate.hpp"
#include "oracles.hpp"

using namespace gmmlor;
using std::numbers::pi;

namespace {

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

/// Offsets whose squares equal the projected variance exactly.
std::vector<CenteredLoR> pseudo_data(double s1, double s2, double phi0, std::size_t n = 100) {
    std::vector<CenteredLoR> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = -pi / 2 + pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double v = s1 * std::pow(std::sin(phi - phi0), 2) + s2 * std::pow(std::cos(phi - phi0), 2);
        out.push_back({std::sqrt(v), phi});
    }
    return out;
}

double angle_gap(double a, double b) {
    const double d = std::remainder(a - b, pi);
    return std::abs(d);
}

double wls_objective(std::span<const LineOfResponse> lors, std::span<const double> w, const Vec2& mu) {
    double sum = 0.0;
    for (std::size_t i = 0; i < lors.size(); ++i) sum += w[i] * std::pow(sinusoid(mu, lors[i].phi()) - lors[i].s(), 2);
    return sum;
}

LoRDataset simulate_single(const GaussianComponent2D& g, std::size_t n, std::uint64_t seed) {
    return generate({fixture::single(g), {n}, seed, false});
}

}  // namespace

TEST_CASE("mean from three exact lines through a point") {
    const std::vector<LineOfResponse> lors{{2.0, 0.0}, {std::sqrt(2.0) / 2.0, pi / 4}, {1.0 + std::sqrt(3.0) / 2.0, -pi / 3}};
    const auto mu = fit_mean(lors, ones(3));
    CHECK(std::abs(mu.x() - 1.0) < 1e-12);
    CHECK(std::abs(mu.y() - 2.0) < 1e-12);
    for (const auto& c : center_offsets(lors, mu)) CHECK(std::abs(c.s_c) < 1e-12);
}

TEST_CASE("zero offsets give the origin") {
    const std::vector<LineOfResponse> lors{{0.0, 0.1}, {0.0, 0.9}, {0.0, -1.2}};
    const auto mu = fit_mean(lors, ones(3));
    CHECK(mu.norm() < 1e-15);
}

TEST_CASE("degenerate mean fits are rejected") {
    const std::vector<LineOfResponse> parallel{{0.1, 0.4}, {0.3, 0.4}, {-0.2, 0.4}};
    CHECK_THROWS_AS(fit_mean(parallel, ones(3)), DegenerateGeometryError);
    const std::vector<LineOfResponse> fine{{0.1, 0.4}, {0.3, -0.4}};
    CHECK_THROWS_AS(fit_mean(fine, std::vector<double>{0.0, 0.0}), DegenerateGeometryError);
}

TEST_CASE("mean of a high-count far component") {
    const auto g = fixture::component(1.25, -1.0, 0.04, 0.006, 0.01);
    const auto d = simulate_single(g, 100000, 31);
    CHECK((fit_mean(d.lors, ones(d.lors.size())) - g.mean).norm() < 0.01);
}

TEST_CASE("weighted mean is a minimizer of the least-squares objective") {
    const auto d = generate({fixture::reference_mixture(), {300, 200, 100}, 77, false});
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> w(d.lors.size());
    for (auto& x : w) x = u(gen);
    const auto mu = fit_mean(d.lors, w);
    const double best = wls_objective(d.lors, w, mu);
    for (int k = 0; k < 8; ++k) {
        const Vec2 step = 1e-4 * Vec2(std::cos(k * pi / 4), std::sin(k * pi / 4));
        CHECK(wls_objective(d.lors, w, mu + step) >= best);
    }
}

TEST_CASE("centering") {
    const std::vector<LineOfResponse> lors{{0.3, 0.2}, {-0.5, 1.1}, {0.0, -0.7}};
    const auto same = center_offsets(lors, Vec2::Zero());
    for (std::size_t i = 0; i < lors.size(); ++i) {
        CHECK(same[i].s_c == lors[i].s());
        CHECK(same[i].phi == lors[i].phi());
    }
    // Shifting data and mean together leaves offsets unchanged.
    const Vec2 mu(0.2, -0.1), shift(0.7, 0.4);
    std::vector<LineOfResponse> moved;
    for (const auto& l : lors) moved.emplace_back(l.s() + sinusoid(shift, l.phi()), l.phi());
    const auto a = center_offsets(lors, mu);
    const auto b = center_offsets(moved, mu + shift);
    for (std::size_t i = 0; i < lors.size(); ++i) CHECK(a[i].s_c == doctest::Approx(b[i].s_c).epsilon(1e-14));
}

TEST_CASE("weighted moments") {
    const std::vector<CenteredLoR> constant(5, CenteredLoR{0.3, 0.0});
    auto m = moments_from_offsets(constant, ones(5));
    CHECK(m.m2w == doctest::Approx(0.09));
    CHECK(m.m4w == doctest::Approx(0.0081));
    CHECK(m.mass == 5.0);

    const std::vector<CenteredLoR> mixed{{0.1, 0}, {0.5, 0}, {2.0, 0}};
    m = moments_from_offsets(mixed, std::vector<double>{0.0, 1.0, 0.0});
    CHECK(m.m2w == doctest::Approx(0.25));
    CHECK(m.m4w == doctest::Approx(0.0625));
}

TEST_CASE("moments of a large sample from the marginal") {
    const auto g = fixture::component(0.0, 0.0, 0.0, 0.0, 0.0);
    GaussianComponent2D c = g;
    c.covariance = covariance_from_eigen({0.1, 0.02, 0.4});
    const auto d = simulate_single(c, 1000000, 555);
    const auto m = moments_from_offsets(center_offsets(d.lors, Vec2::Zero()), ones(d.lors.size()));
    CHECK(std::abs(m.m2w - 0.06) < 0.001);
    CHECK(std::abs(m.m4w - 0.0132) < 0.0005);
}

TEST_CASE("moment inversion examples") {
    auto v = invert_moments({0.0625, 3 * 0.0625 * 0.0625, 1.0});
    CHECK(v.sigma1_sq == doctest::Approx(0.0625));
    CHECK(v.sigma2_sq == doctest::Approx(0.0625));

    v = invert_moments({0.06, 0.0132, 1.0});
    CHECK(v.sigma1_sq == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(v.sigma2_sq == doctest::Approx(0.02).epsilon(1e-12));

    v = invert_moments({0.5, 1.125, 1.0});
    CHECK(v.sigma1_sq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.sigma2_sq == kDefaultVarianceFloor);

    // Sub-Gaussian kurtosis clamps to isotropy.
    v = invert_moments({0.2, 0.1, 1.0});
    CHECK(v.sigma1_sq == doctest::Approx(0.2));
    CHECK(v.sigma2_sq == doctest::Approx(0.2));
}

TEST_CASE("moment round trip") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> logv(std::log(1e-6), std::log(1.0));
    for (int i = 0; i < 1000; ++i) {
        double s1 = std::exp(logv(gen)), s2 = std::exp(logv(gen));
        if (s1 < s2) std::swap(s1, s2);
        const auto t = theoretical_moments({s1, s2, 0.0});
        const auto v = invert_moments({t.m2, t.m4, 1.0}, 1e-300);
        const double err = std::hypot(v.sigma1_sq - s1, v.sigma2_sq - s2) / std::hypot(s1, s2);
        CHECK(err <= 1e-12);
        CHECK(v.sigma1_sq >= v.sigma2_sq);
    }
}

TEST_CASE("orientation from exact pseudo-data") {
    for (double phi0 : {0.3, -0.3}) {
        const auto data = pseudo_data(0.1, 0.02, phi0);
        CHECK(std::abs(solve_orientation(data, ones(data.size()), 0.1, 0.02) - phi0) < 1e-9);
    }
    const auto iso = pseudo_data(0.05, 0.05, 0.7);
    CHECK(solve_orientation(iso, ones(iso.size()), 0.05, 0.05) == 0.0);
}

TEST_CASE("orientation recovery across the angle range") {
    for (int j = 0; j < 50; ++j) {
        const double phi0 = -pi / 2 + pi * (j + 0.5) / 50.0;
        const auto data = pseudo_data(0.09, 0.01, phi0);
        const double got = solve_orientation(data, ones(data.size()), 0.09, 0.01);
        CHECK(got > -pi / 2);
        CHECK(got <= pi / 2);
        CHECK(angle_gap(got, phi0) < 1e-9);
    }
}

TEST_CASE("variance refinement") {
    SUBCASE("exact pseudo-data") {
        const auto data = pseudo_data(0.1, 0.02, 0.3);
        const auto e = refine_sigmas(data, ones(data.size()), 0.3);
        CHECK(std::abs(e.sigma1_sq - 0.1) < 1e-10);
        CHECK(std::abs(e.sigma2_sq - 0.02) < 1e-10);
        CHECK(e.phi0 == doctest::Approx(0.3));
    }
    SUBCASE("wrong axis assignment is reordered") {
        const auto data = pseudo_data(0.1, 0.02, 0.3);
        const auto e = refine_sigmas(data, ones(data.size()), 0.3 - pi / 2);
        CHECK(std::abs(e.sigma1_sq - 0.1) < 1e-10);
        CHECK(std::abs(e.sigma2_sq - 0.02) < 1e-10);
        CHECK(angle_gap(e.phi0, 0.3) < 1e-12);
    }
    SUBCASE("point source") {
        const std::vector<CenteredLoR> zeros{{0, -1}, {0, 0}, {0, 0.5}, {0, 1.2}};
        const auto e = refine_sigmas(zeros, ones(4), 0.2);
        CHECK(e.sigma1_sq == kDefaultVarianceFloor);
        CHECK(e.sigma2_sq == kDefaultVarianceFloor);
    }
    SUBCASE("isotropic pseudo-data") {
        const auto data = pseudo_data(0.04, 0.04, 0.0);
        for (double phi0 : {-1.0, 0.0, 0.6}) {
            const auto e = refine_sigmas(data, ones(data.size()), phi0);
            CHECK(e.sigma1_sq == doctest::Approx(0.04).epsilon(1e-12));
            CHECK(e.sigma2_sq == doctest::Approx(0.04).epsilon(1e-12));
        }
    }
    SUBCASE("output is stationary on noisy data") {
        const auto g = fixture::component(0.1, 0.2, 0.04, 0.03, 0.09);
        const auto d = simulate_single(g, 5000, 64);
        const auto offsets = center_offsets(d.lors, g.mean);
        std::vector<double> w(offsets.size());
        std::mt19937_64 gen(2);
        std::uniform_real_distribution<double> u(0.2, 1.0);
        for (auto& x : w) x = u(gen);
        const auto e = refine_sigmas(offsets, w, 0.9);
        double g1 = 0.0, g2 = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            const double a = std::pow(std::sin(offsets[i].phi - e.phi0), 2);
            const double b = std::pow(std::cos(offsets[i].phi - e.phi0), 2);
            const double r = e.sigma1_sq * a + e.sigma2_sq * b - offsets[i].s_c * offsets[i].s_c;
            g1 += 2.0 * w[i] * r * a;
            g2 += 2.0 * w[i] * r * b;
            scale += w[i] * std::pow(offsets[i].s_c, 4);
        }
        CHECK(std::abs(g1) < 1e-8 * scale);
        CHECK(std::abs(g2) < 1e-8 * scale);
    }
}

TEST_CASE("covariance estimation") {
    SUBCASE("skewed component at high count") {
        const auto g = fixture::component(-0.4, -0.4, 0.04, 0.03, 0.09);
        const auto d = simulate_single(g, 100000, 91);
        const auto c = estimate_covariance(center_offsets(d.lors, g.mean), ones(d.lors.size()));
        CHECK((c - g.covariance).norm() < 0.01);
        CHECK(c(0, 1) == c(1, 0));
    }
    SUBCASE("axis-aligned truth") {
        const auto g = fixture::component(0.0, 0.0, 0.09, 0.0, 0.04);
        const auto d = simulate_single(g, 100000, 92);
        const auto c = estimate_covariance(center_offsets(d.lors, g.mean), ones(d.lors.size()));
        CHECK(angle_gap(eigen_from_covariance(c).phi0, 0.0) < 0.1);
    }
    SUBCASE("point source collapses to the floor") {
        const std::vector<CenteredLoR> zeros{{0, -1}, {0, 0}, {0, 0.5}, {0, 1.2}};
        const Mat2 c = estimate_covariance(zeros, ones(4), 1e-6);
        CHECK(c(0, 0) == doctest::Approx(1e-6));
        CHECK(c(1, 1) == doctest::Approx(1e-6));
        CHECK(std::abs(c(0, 1)) < 1e-20);
    }
    SUBCASE("eigenvalues respect the floor") {
        const std::vector<CenteredLoR> line{{0.3, 0.0}, {0.3, 0.01}, {0.0, 1.5}, {0.0, -1.5}, {0.2, 0.4}};
        const auto e = eigen_from_covariance(estimate_covariance(line, ones(5), 1e-4));
        CHECK(e.sigma2_sq >= 1e-4 * (1 - 1e-12));
    }
}

TEST_CASE("membership update") {
    const auto d = generate({fixture::reference_mixture(), {30, 20, 10}, 5, false});
    SUBCASE("single component owns everything") {
        const auto m = update_memberships(fixture::single(fixture::component(0, 0, 0.1, 0, 0.1)), d.lors);
        for (std::size_t i = 0; i < m.rows(); ++i) CHECK(m(i, 0) == 1.0);
    }
    SUBCASE("identical components split evenly") {
        const auto g = fixture::component(0.1, 0.1, 0.05, 0.01, 0.07, 0.5);
        const auto m = update_memberships(MixtureModel2D({g, g}), d.lors);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            CHECK(m(i, 0) == doctest::Approx(0.5));
            CHECK(m(i, 1) == doctest::Approx(0.5));
        }
    }
    SUBCASE("line through an isolated component") {
        const auto model = fixture::reference_mixture();
        const std::vector<LineOfResponse> lor{{sinusoid(Vec2(1.25, -1.0), 0.0), 0.0}};
        const auto m = update_memberships(model, lor);
        // Oracle: numerators tau_k * line integral, evaluated by adaptive quadrature.
        double num[3], total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) total += num[k] = model[k].weight * oracle::line_integral(model[k], lor[0].s(), 0.0);
        // Dominant, though the horizontal line also crosses the y-tail of component 2.
        CHECK(m(0, 2) == doctest::Approx(0.898272).epsilon(1e-5));
        for (std::size_t k = 0; k < 3; ++k) CHECK(m(0, k) == doctest::Approx(num[k] / total).epsilon(1e-8));
    }
    SUBCASE("far lines still normalize") {
        const std::vector<LineOfResponse> far{{1e3, 0.2}, {-5e2, -1.0}};
        const auto m = update_memberships(fixture::reference_mixture(), far);
        for (std::size_t i = 0; i < 2; ++i) CHECK(m(i, 0) + m(i, 1) + m(i, 2) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("log-likelihood proxy") {
        const auto model = fixture::reference_mixture();
        const auto u = compute_memberships(model, d.lors);
        double expected = 0.0;
        for (const auto& l : d.lors) {
            double s = 0.0;
            for (const auto& g : model) s += g.weight * line_integral_density(g, l);
            expected += std::log(s);
        }
        CHECK(u.loglik_proxy == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("single-component fit equals the direct pipeline") {
    const auto g = fixture::component(0.3, -0.1, 0.05, -0.02, 0.03);
    const auto d = simulate_single(g, 3000, 12);
    FitConfig cfg;
    const auto r = fit(d.lors, cfg);
    CHECK(r.state.converged);
    const auto phase2 = std::count_if(r.trace.begin(), r.trace.end(), [](const auto& t) { return t.phase == 2; });
    CHECK(phase2 <= 2);
    const Vec2 mu = fit_mean(d.lors, ones(d.lors.size()));
    const Mat2 cov = estimate_covariance(center_offsets(d.lors, mu), ones(d.lors.size()));
    CHECK((r.model()[0].mean - mu).norm() < 1e-12);
    CHECK((r.model()[0].covariance - cov).norm() < 1e-12);
    CHECK(r.model()[0].weight == 1.0);
}

TEST_CASE("fit invariants hold after every soft iteration") {
    const auto d = generate({fixture::reference_mixture(), {700, 500, 200}, 3, false});
    FitConfig cfg;
    cfg.num_components = 3;
    cfg.seed = 4;
    cfg.weight_tol = 1e-6;
    cfg.max_iters_phase2 = 40;
    int calls = 0;
    cfg.on_iteration = [&](const FitState& s) {
        ++calls;
        CHECK(s.phase == 2);
        double tau = 0.0;
        for (const auto& c : s.model) {
            tau += c.weight;
            CHECK((c.covariance - c.covariance.transpose()).norm() == 0.0);
            CHECK(eigen_from_covariance(c.covariance).sigma2_sq >= cfg.variance_floor * (1 - 1e-9));
        }
        CHECK(std::abs(tau - 1.0) <= 1e-9);
        const auto& p = s.memberships.entries();
        CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
        const auto masses = s.memberships.masses();
        CHECK(std::accumulate(masses.begin(), masses.end(), 0.0) == doctest::Approx(1400.0).epsilon(1e-12));
        for (std::size_t k = 0; k < 3; ++k) CHECK(s.model[k].weight == doctest::Approx(masses[k] / 1400.0).epsilon(1e-12));
    };
    const auto r = fit(d.lors, cfg);
    CHECK(calls == r.state.iteration - static_cast<int>(std::count_if(r.trace.begin(), r.trace.end(),
                                                                      [](const auto& t) { return t.phase == 1; })));
    CHECK(calls >= 1);
}

TEST_CASE("trace records") {
    const auto d = generate({fixture::reference_mixture(), {350, 250, 100}, 10, false});
    FitConfig cfg;
    cfg.num_components = 3;
    const auto r = fit(d.lors, cfg);
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.front().phase == 1);
    CHECK(!r.trace.front().loglik_proxy);
    CHECK(r.trace.back().phase == 2);
    CHECK(r.trace.back().loglik_proxy);
    for (std::size_t i = 0; i < r.trace.size(); ++i) CHECK(r.trace[i].iteration == static_cast<int>(i + 1));
}

TEST_CASE("reference mixture weights") {
    const auto truth = fixture::reference_mixture();
    const auto d = generate({truth, fixture::reference_counts(), 2026, false});
    FitConfig cfg;
    cfg.num_components = 3;
    cfg.seed = 1;
    const auto r = fit(d.lors, cfg);
    const auto match = match_components(r.model(), truth);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(r.model()[match[k]].weight - truth[k].weight) < 0.06);
}

TEST_CASE("input order does not matter under a matched start") {
    const auto d = generate({fixture::reference_mixture(), {700, 500, 200}, 44, false});
    const auto labels = balanced_random_labels(d.lors.size(), 3, 9);
    std::vector<std::size_t> order(d.lors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(13);
    shuffle(order.begin(), order.end(), rng);
    std::vector<LineOfResponse> lors2;
    std::vector<std::size_t> labels2;
    for (auto i : order) {
        lors2.push_back(d.lors[i]);
        labels2.push_back(labels[i]);
    }
    FitConfig cfg;
    cfg.num_components = 3;
    const auto a = fit(d.lors, cfg, labels);
    const auto b = fit(lors2, cfg, labels2);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK((a.model()[k].mean - b.model()[k].mean).norm() < 1e-8);
        CHECK((a.model()[k].covariance - b.model()[k].covariance).norm() < 1e-8);
        CHECK(a.model()[k].weight == doctest::Approx(b.model()[k].weight).epsilon(1e-8));
    }
}

TEST_CASE("fit preconditions and failures") {
    const auto d = generate({fixture::reference_mixture(), {10, 10, 10}, 1, false});
    FitConfig cfg;
    cfg.num_components = 7;
    CHECK_THROWS_AS(fit(d.lors, cfg), std::invalid_argument);

    cfg.num_components = 2;
    const std::vector<std::size_t> all_zero(d.lors.size(), 0);
    CHECK_THROWS_AS(fit(d.lors, cfg, all_zero), ComponentCollapseError);

    FitConfig bad;
    bad.weight_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = FitConfig{};
    bad.num_components = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = FitConfig{};
    bad.restarts = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("balanced initial labels") {
    const auto labels = balanced_random_labels(10, 3, 5);
    std::vector<int> hist(3, 0);
    for (auto l : labels) ++hist[l];
    CHECK(hist == std::vector<int>{4, 3, 3});
    CHECK(labels == balanced_random_labels(10, 3, 5));
    CHECK(labels != balanced_random_labels(10, 3, 6));
}

TEST_CASE("restarts keep the best proxy") {
    const auto d = generate({fixture::reference_mixture(), {350, 250, 100}, 10, false});
    FitConfig cfg;
    cfg.num_components = 3;
    cfg.seed = 3;
    const auto one = fit(d.lors, cfg);
    cfg.restarts = 4;
    const auto many = fit(d.lors, cfg);
    CHECK(*many.trace.back().loglik_proxy >= *one.trace.back().loglik_proxy);
    CHECK(many.restart < 4);
}
