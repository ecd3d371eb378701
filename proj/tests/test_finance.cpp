#include <doctest.h>

#include <cmath>
#include <vector>

#include "ampex/errors.hpp"
#include "ampex/finance.hpp"
#include "ampex/rng.hpp"

using namespace ampex;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Closed-form Black-Scholes European put, the pricing oracle.
double bs_put(double s, double k, double r, double sigma, double t) {
    const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * t) / (sigma * std::sqrt(t));
    const double d2 = d1 - sigma * std::sqrt(t);
    return k * std::exp(-r * t) * normal_cdf(-d2) - s * normal_cdf(-d1);
}

} // namespace

TEST_SUITE_BEGIN("finance");

TEST_CASE("model validation") {
    CHECK_NOTHROW(make_bs_model(3, 0.01, 0.2, 0.3, 100.0, 1.0));
    CHECK_THROWS_AS(make_bs_model(2, 0.0, -0.1, 0.0, 100.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_bs_model(2, 0.0, 0.2, 1.0, 100.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_bs_model(2, 0.0, 0.2, 0.0, -5.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_bs_model(2, 0.0, 0.2, 0.0, 100.0, 0.0), ConfigError);
    // Indefinite correlation matrices fail through the Cholesky factor.
    BSModel model = make_bs_model(3, 0.0, 0.2, 0.0, 100.0, 1.0);
    model.rho(0, 1) = model.rho(1, 0) = 0.9;
    model.rho(1, 2) = model.rho(2, 1) = 0.9;
    model.rho(0, 2) = model.rho(2, 0) = -0.9;
    CHECK_THROWS_AS(model.correlation_cholesky(), NumericError);
}

TEST_CASE("terminal prices in the deterministic limits") {
    BSModel tiny_vol = make_bs_model(2, 0.03, 1e-12, 0.0, 100.0, 2.0);
    const double s0[] = {90.0, 110.0};
    const double z[] = {0.7, -1.3};
    const auto st = terminal_prices(tiny_vol, s0, z);
    CHECK(st[0] == doctest::Approx(90.0 * std::exp(0.03 * 2.0)).epsilon(1e-9));
    CHECK(st[1] == doctest::Approx(110.0 * std::exp(0.03 * 2.0)).epsilon(1e-9));

    BSModel model = make_bs_model(2, 0.05, 0.2, 0.5, 100.0, 1.0);
    const double zero_z[] = {0.0, 0.0};
    const auto drift = terminal_prices(model, s0, zero_z);
    CHECK(drift[0] == doctest::Approx(90.0 * std::exp((0.05 - 0.02) * 1.0)));
    CHECK(drift[1] == doctest::Approx(110.0 * std::exp((0.05 - 0.02) * 1.0)));
}

TEST_CASE("independent assets stay uncorrelated") {
    BSModel model = make_bs_model(2, 0.0, 0.2, 0.0, 100.0, 1.0);
    const double s0[] = {100.0, 100.0};
    Rng rng(121);
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    std::vector<double> z(2);
    for (int i = 0; i < n; ++i) {
        z[0] = rng.normal();
        z[1] = rng.normal();
        const auto st = terminal_prices(model, s0, z);
        const double lx = std::log(st[0] / 100.0);
        const double ly = std::log(st[1] / 100.0);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        syy += ly * ly;
        sxy += lx * ly;
    }
    const double corr = (sxy / n - sx / n * sy / n) /
                        std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("correlated assets reproduce the requested correlation") {
    BSModel model = make_bs_model(2, 0.0, 0.2, 0.6, 100.0, 1.0);
    const double s0[] = {100.0, 100.0};
    Rng rng(122);
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    std::vector<double> z(2);
    for (int i = 0; i < n; ++i) {
        z[0] = rng.normal();
        z[1] = rng.normal();
        const auto st = terminal_prices(model, s0, z);
        const double lx = std::log(st[0] / 100.0);
        const double ly = std::log(st[1] / 100.0);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        syy += ly * ly;
        sxy += lx * ly;
    }
    const double corr = (sxy / n - sx / n * sy / n) /
                        std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
    CHECK(corr == doctest::Approx(0.6).epsilon(0.02));
}

TEST_CASE("worst-of put payoff") {
    const double a[] = {120.0, 130.0};
    CHECK(worst_of_put_payoff(a, 100.0) == 0.0);
    const double b[] = {80.0, 150.0};
    CHECK(worst_of_put_payoff(b, 100.0) == 20.0);
    const double c[] = {100.0, 170.0};
    CHECK(worst_of_put_payoff(c, 100.0) == 0.0);
}

TEST_CASE("payoff is non-increasing in every asset price") {
    Rng rng(123);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> s(3);
        for (double& v : s) v = 40.0 + 120.0 * rng.uniform01();
        const double base = worst_of_put_payoff(s, 100.0);
        const std::size_t bump = static_cast<std::size_t>(rng.next_u64() % 3);
        s[bump] += 30.0 * rng.uniform01();
        CHECK(worst_of_put_payoff(s, 100.0) <= base);
    }
}

TEST_CASE("single-asset Monte Carlo matches the closed form") {
    BSModel model = make_bs_model(1, 0.0, 0.2, 0.0, 100.0, 1.0);
    PricerConfig config;
    config.n_paths = 1000000;
    config.seed = 124;
    const double s0[] = {100.0};
    const McResult result = mc_price_stats(model, s0, config);
    const double oracle = bs_put(100.0, 100.0, 0.0, 0.2, 1.0);
    CHECK(oracle == doctest::Approx(7.9656).epsilon(1e-3)); // sanity pin on the oracle itself
    CHECK(std::abs(result.price - oracle) < 3.0 * result.std_error);
}

TEST_CASE("degenerate pricing limits") {
    BSModel model = make_bs_model(2, 0.02, 0.2, 0.0, 1e-12, 1.0);
    PricerConfig config;
    config.n_paths = 100;
    config.seed = 7;
    const double s0[] = {100.0, 90.0};
    CHECK(mc_price(model, s0, config) == 0.0); // strike ~ 0 pays nothing

    BSModel still = make_bs_model(1, 0.02, 1e-12, 0.0, 100.0, 1.0);
    const double low[] = {80.0};
    const double expected = std::exp(-0.02) * (100.0 - 80.0 * std::exp(0.02));
    CHECK(mc_price(still, low, config) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("mc_price is deterministic in the seed") {
    BSModel model = make_bs_model(3, 0.01, 0.25, 0.4, 100.0, 1.5);
    PricerConfig config;
    config.n_paths = 5000;
    config.seed = 999;
    const double s0[] = {95.0, 105.0, 100.0};
    CHECK(mc_price(model, s0, config) == mc_price(model, s0, config));
    config.seed = 1000;
    CHECK(mc_price(model, s0, config) != mc_price(model, s0, config) - 1.0);
}

TEST_CASE("standard error shrinks as 1/sqrt(n_paths)") {
    BSModel model = make_bs_model(1, 0.0, 0.2, 0.0, 100.0, 1.0);
    const double s0[] = {100.0};
    auto spread = [&](std::int64_t paths) {
        double mean = 0.0;
        std::vector<double> prices(50);
        for (int rep = 0; rep < 50; ++rep) {
            PricerConfig config;
            config.n_paths = paths;
            config.seed = static_cast<std::uint64_t>(2000 + rep);
            prices[static_cast<std::size_t>(rep)] = mc_price(model, s0, config);
            mean += prices[static_cast<std::size_t>(rep)];
        }
        mean /= 50.0;
        double var = 0.0;
        for (double p : prices) var += (p - mean) * (p - mean);
        return std::sqrt(var / 49.0);
    };
    const double ratio = spread(1000) / spread(100000);
    CHECK(ratio > 10.0 / 1.5);
    CHECK(ratio < 10.0 * 1.5);
}

TEST_CASE("domain bounds against the closed form") {
    BSModel model = make_bs_model(5, 0.0, 0.2, 0.0, 100.0, 1.0);
    const DomainBounds bounds = domain_bounds(model, 0.01);
    for (double lo : bounds.lower) CHECK(lo == doctest::Approx(1.0));
    for (double up : bounds.upper) CHECK(up == doctest::Approx(253.55).epsilon(1e-3));

    BSModel tiny = make_bs_model(2, 0.0, 1e-9, 0.0, 100.0, 1.0);
    CHECK(domain_bounds(tiny, 0.01).upper[0] == doctest::Approx(100.0).epsilon(1e-4));
    // epsilon = dK makes the log term vanish exactly.
    CHECK(domain_bounds(model, 500.0).upper[0] == doctest::Approx(100.0));
    CHECK_THROWS_AS(domain_bounds(model, 0.0), ConfigError);
    CHECK_THROWS_AS(domain_bounds(model, 501.0), ConfigError);
}

TEST_CASE("grid_target in the deterministic limit matches the closed form") {
    BSModel still = make_bs_model(1, 0.015, 1e-12, 0.0, 100.0, 1.0);
    std::vector<OrthoBasis1D> bases = {make_cosine_basis(50.0, 150.0, 4, 4)};
    PricerConfig config;
    config.n_paths = 10;
    config.seed = 1;
    const GridTensor target = grid_target(still, bases, config);
    for (std::int64_t j = 0; j < 4; ++j) {
        const double s = bases[0].grid[static_cast<std::size_t>(j)];
        const double expected =
            std::exp(-0.015) * std::max(100.0 - s * std::exp(0.015), 0.0);
        CHECK(target.entries()[static_cast<std::size_t>(j)] ==
              doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(target.stored_norm().has_value());
}

TEST_CASE("grid values are non-negative and bounded by the discounted strike") {
    BSModel model = make_bs_model(2, 0.03, 0.3, 0.2, 100.0, 1.0);
    std::vector<OrthoBasis1D> bases;
    const DomainBounds bounds = domain_bounds(model, 0.01);
    for (int i = 0; i < 2; ++i)
        bases.push_back(make_cosine_basis(bounds.lower[static_cast<std::size_t>(i)],
                                          bounds.upper[static_cast<std::size_t>(i)], 4, 4));
    PricerConfig config;
    config.n_paths = 2000;
    config.seed = 5;
    const GridTensor target = grid_target(model, bases, config);
    const double cap = 100.0 * std::exp(-0.03);
    for (double v : target.entries()) {
        CHECK(v >= 0.0);
        CHECK(v <= cap);
    }
}

TEST_CASE("CRN smooths adjacent-point differences") {
    BSModel model = make_bs_model(1, 0.0, 0.2, 0.0, 100.0, 1.0);
    std::vector<OrthoBasis1D> bases = {make_cosine_basis(60.0, 140.0, 4, 4)};
    auto difference_spread = [&](bool crn) {
        std::vector<double> diffs;
        for (int rep = 0; rep < 30; ++rep) {
            PricerConfig config;
            config.n_paths = 400;
            config.seed = static_cast<std::uint64_t>(3000 + rep);
            config.crn = crn;
            const GridTensor t = grid_target(model, bases, config);
            diffs.push_back(t.entries()[1] - t.entries()[0]);
        }
        double mean = 0.0;
        for (double v : diffs) mean += v;
        mean /= static_cast<double>(diffs.size());
        double var = 0.0;
        for (double v : diffs) var += (v - mean) * (v - mean);
        return var / static_cast<double>(diffs.size() - 1);
    };
    CHECK(difference_spread(true) < difference_spread(false));
}

TEST_CASE("three-asset smoke run with a deep in-the-money corner bound") {
    BSModel model = make_bs_model(3, 0.0, 0.2, 0.0, 100.0, 1.0);
    const DomainBounds bounds = domain_bounds(model, 0.01);
    std::vector<OrthoBasis1D> bases;
    for (int i = 0; i < 3; ++i)
        bases.push_back(make_cosine_basis(bounds.lower[static_cast<std::size_t>(i)],
                                          bounds.upper[static_cast<std::size_t>(i)], 8, 8));
    PricerConfig config;
    config.n_paths = 10000;
    config.seed = 77;
    const GridTensor target = grid_target(model, bases, config);
    CHECK(target.stored_norm().value() > 0.0);

    // Worst-of put dominates every single-asset put; check the deepest ITM corner.
    const double corner[] = {bases[0].grid[0], bases[1].grid[0], bases[2].grid[0]};
    PricerConfig corner_config;
    corner_config.n_paths = 10000;
    corner_config.seed = 78;
    const McResult at_corner = mc_price_stats(model, corner, corner_config);
    double best_single = 0.0;
    for (double s : corner) best_single = std::max(best_single, bs_put(s, 100.0, 0.0, 0.2, 1.0));
    CHECK(target.entries()[0] >= best_single - 3.0 * at_corner.std_error);
}

TEST_CASE("grid_target refuses absurdly large grids") {
    BSModel model = make_bs_model(6, 0.0, 0.2, 0.0, 100.0, 1.0);
    std::vector<OrthoBasis1D> bases;
    for (int i = 0; i < 6; ++i) bases.push_back(make_cosine_basis(1.0, 200.0, 32, 32));
    PricerConfig config;
    config.n_paths = 10;
    CHECK_THROWS_AS(grid_target(model, bases, config), ConfigError); // 32^6 > 2^24
}

TEST_CASE("sample_points respects limits, clipping and seeds") {
    BSModel still = make_bs_model(2, 0.04, 1e-12, 0.0, 100.0, 1.0);
    const double start[] = {100.0, 100.0};
    const double lo[] = {1.0, 1.0};
    const double hi[] = {400.0, 400.0};
    const Matrix pts = sample_points(still, start, 5, 9, lo, hi);
    for (int k = 0; k < 5; ++k)
        for (int i = 0; i < 2; ++i)
            CHECK(pts(k, i) == doctest::Approx(100.0 * std::exp(0.04)).epsilon(1e-9));

    BSModel model = make_bs_model(2, 0.0, 0.2, 0.3, 100.0, 1.0);
    const Matrix a = sample_points(model, start, 100, 10, lo, hi);
    const Matrix b = sample_points(model, start, 100, 10, lo, hi);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const double tight_hi[] = {120.0, 120.0};
    const Matrix clipped = sample_points(model, start, 200, 11, lo, tight_hi);
    for (int k = 0; k < 200; ++k)
        for (int i = 0; i < 2; ++i) {
            CHECK(clipped(k, i) >= 1.0);
            CHECK(clipped(k, i) <= 120.0);
        }
}

TEST_SUITE_END();
