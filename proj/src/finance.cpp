#include "ampex/finance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ampex/errors.hpp"
#include "ampex/rng.hpp"

namespace ampex {

void BSModel::validate() const {
    if (d < 1) throw ConfigError("model: asset count must be >= 1");
    if (static_cast<int>(sigma.size()) != d) throw ConfigError("model: need one sigma per asset");
    for (double s : sigma)
        if (!(s > 0.0)) throw ConfigError("model: volatilities must be positive");
    if (rho.rows() != d || rho.cols() != d) throw ConfigError("model: rho must be d x d");
    for (int i = 0; i < d; ++i) {
        if (std::abs(rho(i, i) - 1.0) > 1e-12)
            throw ConfigError("model: rho must have a unit diagonal");
        for (int j = 0; j < d; ++j) {
            if (std::abs(rho(i, j) - rho(j, i)) > 1e-12)
                throw ConfigError("model: rho must be symmetric");
            if (i != j && !(std::abs(rho(i, j)) < 1.0))
                throw ConfigError("model: off-diagonal correlations must lie in (-1,1)");
        }
    }
    if (!(strike > 0.0)) throw ConfigError("model: strike must be positive");
    if (!(maturity > 0.0)) throw ConfigError("model: maturity must be positive");
}

Matrix BSModel::correlation_cholesky() const {
    validate();
    return cholesky(rho);
}

BSModel make_bs_model(int d, double rate, double sigma, double rho_offdiag, double strike,
                      double maturity) {
    BSModel model;
    model.d = d;
    model.rate = rate;
    model.sigma.assign(static_cast<std::size_t>(d), sigma);
    model.rho = Matrix::Constant(d, d, rho_offdiag);
    for (int i = 0; i < d; ++i) model.rho(i, i) = 1.0;
    model.strike = strike;
    model.maturity = maturity;
    model.validate();
    return model;
}

namespace {

// Growth factors exp((r - sigma^2/2) T + sigma sqrt(T) (L z)) for one draw.
void growth_factors(const BSModel& model, const Matrix& chol, std::span<const double> z,
                    double horizon, std::span<double> out) {
    const int d = model.d;
    for (int i = 0; i < d; ++i) {
        double w = 0.0;
        for (int j = 0; j <= i; ++j) w += chol(i, j) * z[static_cast<std::size_t>(j)];
        const double s = model.sigma[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] =
            std::exp((model.rate - 0.5 * s * s) * horizon + s * std::sqrt(horizon) * w);
    }
}

} // namespace

std::vector<double> terminal_prices(const BSModel& model, std::span<const double> s0,
                                    std::span<const double> z) {
    model.validate();
    if (s0.size() != static_cast<std::size_t>(model.d) || z.size() != s0.size())
        throw ConfigError("terminal_prices: need d spot prices and d normals");
    for (double s : s0)
        if (!(s > 0.0)) throw ConfigError("terminal_prices: spot prices must be positive");
    const Matrix chol = model.correlation_cholesky();
    std::vector<double> growth(static_cast<std::size_t>(model.d));
    growth_factors(model, chol, z, model.maturity, growth);
    std::vector<double> out(static_cast<std::size_t>(model.d));
    for (int i = 0; i < model.d; ++i)
        out[static_cast<std::size_t>(i)] = s0[static_cast<std::size_t>(i)] * growth[static_cast<std::size_t>(i)];
    return out;
}

double worst_of_put_payoff(std::span<const double> s, double strike) {
    double worst = s[0];
    for (double v : s) worst = std::min(worst, v);
    return std::max(strike - worst, 0.0);
}

McResult mc_price_stats(const BSModel& model, std::span<const double> s0,
                        const PricerConfig& config) {
    model.validate();
    if (config.n_paths < 1) throw ConfigError("mc_price: need at least one path");
    if (s0.size() != static_cast<std::size_t>(model.d))
        throw ConfigError("mc_price: need d spot prices");
    const Matrix chol = model.correlation_cholesky();

    Rng rng(config.seed);
    std::vector<double> z(static_cast<std::size_t>(model.d));
    std::vector<double> growth(static_cast<std::size_t>(model.d));
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t p = 0; p < config.n_paths; ++p) {
        for (double& v : z) v = rng.normal();
        growth_factors(model, chol, z, model.maturity, growth);
        double worst = s0[0] * growth[0];
        for (int i = 1; i < model.d; ++i)
            worst = std::min(worst, s0[static_cast<std::size_t>(i)] * growth[static_cast<std::size_t>(i)]);
        const double payoff = std::max(model.strike - worst, 0.0);
        sum += payoff;
        sum_sq += payoff * payoff;
    }
    const double n = static_cast<double>(config.n_paths);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    const double discount = std::exp(-model.rate * model.maturity);
    return {discount * mean, discount * std::sqrt(var / n)};
}

double mc_price(const BSModel& model, std::span<const double> s0, const PricerConfig& config) {
    return mc_price_stats(model, s0, config).price;
}

DomainBounds domain_bounds(const BSModel& model, double epsilon) {
    model.validate();
    const double limit = static_cast<double>(model.d) * model.strike;
    if (!(epsilon > 0.0) || !(epsilon <= limit))
        throw ConfigError("domain_bounds: epsilon must lie in (0, d*K]");
    DomainBounds bounds;
    bounds.lower.assign(static_cast<std::size_t>(model.d), 0.01 * model.strike);
    bounds.upper.resize(static_cast<std::size_t>(model.d));
    const double log_term = std::log(limit / epsilon);
    for (int i = 0; i < model.d; ++i) {
        const double s = model.sigma[static_cast<std::size_t>(i)];
        bounds.upper[static_cast<std::size_t>(i)] =
            model.strike * std::exp(std::sqrt(2.0 * s * s * model.maturity * log_term));
    }
    return bounds;
}

GridTensor grid_target(const BSModel& model, std::span<const OrthoBasis1D> bases,
                       const PricerConfig& config,
                       const std::function<void(std::int64_t, std::int64_t)>& progress) {
    model.validate();
    if (static_cast<int>(bases.size()) != model.d)
        throw ConfigError("grid_target: need one basis per asset");
    if (config.n_paths < 1) throw ConfigError("grid_target: need at least one path");

    std::vector<std::int64_t> dims;
    std::int64_t total = 1;
    for (const auto& basis : bases) {
        dims.push_back(basis.grid_count);
        total *= basis.grid_count;
        if (total > (std::int64_t{1} << 24))
            throw ConfigError("grid_target: grid larger than the 2^24-point cap");
    }
    GridTensor out(dims);

    const Matrix chol = model.correlation_cholesky();
    const int d = model.d;
    const double discount = std::exp(-model.rate * model.maturity);

    // CRN: one growth matrix for the whole surface.
    Matrix growth;
    if (config.crn) {
        growth.resize(config.n_paths, d);
        Rng rng(config.seed);
        std::vector<double> z(static_cast<std::size_t>(d));
        std::vector<double> g(static_cast<std::size_t>(d));
        for (std::int64_t p = 0; p < config.n_paths; ++p) {
            for (double& v : z) v = rng.normal();
            growth_factors(model, chol, z, model.maturity, g);
            for (int i = 0; i < d; ++i) growth(p, i) = g[static_cast<std::size_t>(i)];
        }
    }

    std::vector<std::int64_t> index(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::int64_t flat = 0; flat < total; ++flat) {
        std::int64_t rem = flat;
        for (int i = d - 1; i >= 0; --i) {
            index[static_cast<std::size_t>(i)] = rem % dims[static_cast<std::size_t>(i)];
            rem /= dims[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < d; ++i)
            x[static_cast<std::size_t>(i)] =
                bases[static_cast<std::size_t>(i)].grid[static_cast<std::size_t>(index[static_cast<std::size_t>(i)])];

        double value;
        if (config.crn) {
            double sum = 0.0;
            for (std::int64_t p = 0; p < config.n_paths; ++p) {
                double worst = x[0] * growth(p, 0);
                for (int i = 1; i < d; ++i) worst = std::min(worst, x[static_cast<std::size_t>(i)] * growth(p, i));
                sum += std::max(model.strike - worst, 0.0);
            }
            value = discount * sum / static_cast<double>(config.n_paths);
        } else {
            PricerConfig point_config = config;
            point_config.seed = derive_seed(config.seed, {0x9d1du, static_cast<std::uint64_t>(flat)});
            value = mc_price(model, x, point_config);
        }
        out.entries()[static_cast<std::size_t>(flat)] = value;
        if (progress && (flat % 4096 == 4095 || flat + 1 == total)) progress(flat + 1, total);
    }
    normalization_constant(out);
    return out;
}

Matrix sample_points(const BSModel& model, std::span<const double> s_start, std::int64_t n,
                     std::uint64_t seed, std::span<const double> lower,
                     std::span<const double> upper) {
    model.validate();
    if (n < 1) throw ConfigError("sample_points: need n >= 1");
    if (s_start.size() != static_cast<std::size_t>(model.d) ||
        lower.size() != s_start.size() || upper.size() != s_start.size())
        throw ConfigError("sample_points: need d start prices and d bounds");
    const Matrix chol = model.correlation_cholesky();
    const double horizon = 1.0; // points follow S(t) one year after the start

    Matrix points(n, model.d);
    Rng rng(seed);
    std::vector<double> z(static_cast<std::size_t>(model.d));
    std::vector<double> g(static_cast<std::size_t>(model.d));
    std::int64_t attempts_left = std::max<std::int64_t>(n * 10000, 1000000);
    for (std::int64_t k = 0; k < n;) {
        if (--attempts_left < 0)
            throw NumericError("sample_points: domain rejects nearly all draws");
        for (double& v : z) v = rng.normal();
        growth_factors(model, chol, z, horizon, g);
        bool inside = true;
        for (int i = 0; i < model.d; ++i) {
            const double s = s_start[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)];
            if (s < lower[static_cast<std::size_t>(i)] || s > upper[static_cast<std::size_t>(i)]) {
                inside = false;
                break;
            }
            points(k, i) = s;
        }
        if (inside) ++k;
    }
    return points;
}

} // namespace ampex
