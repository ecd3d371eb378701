#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ampex/grid_tensor.hpp"
#include "ampex/linalg.hpp"
#include "ampex/ortho.hpp"

namespace ampex {

/// Black-Scholes market for d correlated assets under the risk-neutral
/// measure, plus the worst-of put contract terms.
struct BSModel {
    int d = 1;
    double rate = 0.0;           ///< risk-free rate, per year
    std::vector<double> sigma;   ///< volatilities, per sqrt(year)
    Matrix rho;                  ///< correlation matrix, unit diagonal
    double strike = 100.0;
    double maturity = 1.0;       ///< years

    /// Throws ConfigError on malformed parameters; positive definiteness of
    /// rho is established by the Cholesky factor below.
    void validate() const;
    Matrix correlation_cholesky() const;
};

/// Uniform helper: all volatilities sigma, all off-diagonal correlations rho.
BSModel make_bs_model(int d, double rate, double sigma, double rho_offdiag, double strike,
                      double maturity);

struct PricerConfig {
    std::int64_t n_paths = 100000;
    std::uint64_t seed = 0;
    bool crn = true; ///< one shared normal draw matrix across all grid points
};

/// Exact terminal GBM step S_i(T) = s0_i exp((r - sigma_i^2/2)T
/// + sigma_i sqrt(T) (L z)_i) with L the correlation Cholesky factor.
std::vector<double> terminal_prices(const BSModel& model, std::span<const double> s0,
                                    std::span<const double> z);

/// max(K - min_i s_i, 0).
double worst_of_put_payoff(std::span<const double> s, double strike);

struct McResult {
    double price = 0.0;
    double std_error = 0.0;
};

/// Discounted Monte Carlo mean of the worst-of put payoff; deterministic for
/// a given seed.
double mc_price(const BSModel& model, std::span<const double> s0, const PricerConfig& config);
McResult mc_price_stats(const BSModel& model, std::span<const double> s0,
                        const PricerConfig& config);

/// Grid bounds U_i = K exp(sqrt(2 sigma_i^2 T log(dK/eps))), L_i = 0.01 K.
struct DomainBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};
DomainBounds domain_bounds(const BSModel& model, double epsilon);

/// Prices the option at every tensor-product grid point of the bases. Under
/// CRN one normal-draw matrix is shared across the whole grid, so that
/// differences between neighboring grid values carry far less Monte Carlo
/// noise. The result stores its norm.
GridTensor grid_target(const BSModel& model, std::span<const OrthoBasis1D> bases,
                       const PricerConfig& config,
                       const std::function<void(std::int64_t, std::int64_t)>& progress = {});

/// n draws of S(1 year) started from s_start, redrawn until inside the
/// hyperrectangle; row-major (n x d).
Matrix sample_points(const BSModel& model, std::span<const double> s_start, std::int64_t n,
                     std::uint64_t seed, std::span<const double> lower,
                     std::span<const double> upper);

} // namespace ampex
