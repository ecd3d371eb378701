#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ampex/finance.hpp"
#include "ampex/linalg.hpp"
#include "ampex/ortho.hpp"
#include "cli/config.hpp"

namespace ampex::cli {

/// Set by the SIGINT handler; long commands stop at the next row boundary
/// after flushing what they have.
bool interrupted();
void request_interrupt();
void clear_interrupt();

BSModel model_from_config(const Config& config);
std::vector<OrthoBasis1D> bases_from_config(const Config& config, const BSModel& model);

/// Evaluation point set: `points.spec` is one of
///   diagonal:N   N evenly spaced points on x1 = ... = xd (endpoints included)
///   file:PATH    CSV with a header row and d coordinate columns
///   sample:N     N terminal-price draws started at the strike, seeded
struct PointSet {
    Matrix points;                        ///< n x d
    std::vector<std::int64_t> grid_index; ///< flat grid index, -1 when off-grid
};
PointSet points_from_config(const Config& config, const BSModel& model,
                            std::span<const OrthoBasis1D> bases);

struct PowerLawFit {
    double log_a = 0.0;
    double b = 0.0;
};
/// Least-squares fit of log y = log_a + b log x.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct GenTargetResult {
    std::string path;
    double norm = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;
};
GenTargetResult cmd_gen_target(const Config& config);

struct ExpandResult {
    std::string path;
    double norm = 0.0;
};
ExpandResult cmd_expand(const Config& config);

struct FitCmdResult {
    std::string mps_path;
    std::string trace_path;
    double final_fidelity = 0.0;
    std::int64_t dof = 0;
    double scale = 0.0;
};
FitCmdResult cmd_fit(const Config& config);

struct EvalRow {
    std::vector<double> x;
    double value = 0.0;
    bool ok = false;
    std::string error;
};
struct EvalResult {
    std::string path;
    std::vector<EvalRow> rows;
};
EvalResult cmd_eval(const Config& config);

struct CompareResult {
    std::string path;
    double max_tn_mc = 0.0;
    double max_cos_mc = 0.0;
    double max_tn_cos = 0.0;
    std::int64_t n_points = 0;
    std::int64_t n_grid_points = 0;
};
CompareResult cmd_compare(const Config& config);

struct ScanRow {
    int m_bl = 0;
    std::int64_t dof = 0;
    double delta_max = 0.0;
    double fidelity = 0.0;
};
struct ScanResult {
    std::string path;
    std::vector<ScanRow> rows;
    PowerLawFit fit;
    bool fitted = false;
};
ScanResult cmd_scan_dof(const Config& config);

struct CanonResult {
    std::string path;
    std::vector<double> eps;
    double norm = 0.0;
};
CanonResult cmd_canon(const Config& config);

/// Dispatches one command line (verb first, no program name). Returns the
/// process exit code: 0 ok, 2 config error, 3 numeric failure, 130 interrupted.
int run_command(const std::vector<std::string>& args);

/// Entry point used by the binary: installs the SIGINT handler and forwards.
int run_main(int argc, char** argv);

} // namespace ampex::cli
