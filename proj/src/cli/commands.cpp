#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ampex/circuit.hpp"
#include "ampex/errors.hpp"
#include "ampex/fit.hpp"
#include "ampex/io.hpp"
#include "ampex/mps.hpp"

namespace ampex::cli {

namespace {
std::atomic<bool> g_interrupted{false};
void handle_sigint(int) { g_interrupted.store(true); }
} // namespace

bool interrupted() { return g_interrupted.load(); }
void request_interrupt() { g_interrupted.store(true); }
void clear_interrupt() { g_interrupted.store(false); }

BSModel model_from_config(const Config& config) {
    BSModel model;
    model.d = static_cast<int>(config.get_int("model.d"));
    if (model.d < 1 || model.d > 12) throw ConfigError("model.d must lie in [1, 12]");
    model.rate = config.get_double("model.rate", 0.0);
    model.strike = config.get_double("model.strike", 100.0);
    model.maturity = config.get_double("model.maturity", 1.0);

    std::vector<double> sigma =
        config.has("model.sigma") ? config.get_doubles("model.sigma") : std::vector<double>{0.2};
    if (sigma.size() == 1) sigma.assign(static_cast<std::size_t>(model.d), sigma[0]);
    if (static_cast<int>(sigma.size()) != model.d)
        throw ConfigError("model.sigma needs 1 or d entries");
    model.sigma = std::move(sigma);

    const double rho = config.get_double("model.rho", 0.0);
    model.rho = Matrix::Constant(model.d, model.d, rho);
    for (int i = 0; i < model.d; ++i) model.rho(i, i) = 1.0;
    model.validate();
    return model;
}

std::vector<OrthoBasis1D> bases_from_config(const Config& config, const BSModel& model) {
    const std::string kind = config.get_string("basis.kind", "cosine");
    const std::int64_t degree = config.get_int("basis.degree");
    const std::int64_t n_gr = config.get_int("basis.n_gr", degree);

    std::vector<double> lower;
    std::vector<double> upper;
    if (config.has("basis.lower") || config.has("basis.upper")) {
        lower = config.get_doubles("basis.lower");
        upper = config.get_doubles("basis.upper");
        if (lower.size() == 1) lower.assign(static_cast<std::size_t>(model.d), lower[0]);
        if (upper.size() == 1) upper.assign(static_cast<std::size_t>(model.d), upper[0]);
        if (static_cast<int>(lower.size()) != model.d || static_cast<int>(upper.size()) != model.d)
            throw ConfigError("basis.lower/upper need 1 or d entries");
    } else {
        const DomainBounds bounds = domain_bounds(model, config.get_double("basis.epsilon", 0.01));
        lower = bounds.lower;
        upper = bounds.upper;
    }
    std::vector<OrthoBasis1D> bases;
    for (int i = 0; i < model.d; ++i)
        bases.push_back(make_basis(kind, lower[static_cast<std::size_t>(i)],
                                   upper[static_cast<std::size_t>(i)], degree, n_gr));
    return bases;
}

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

std::int64_t grid_flat_index(std::span<const OrthoBasis1D> bases, const double* x) {
    std::int64_t flat = 0;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const auto& grid = bases[i].grid;
        std::int64_t hit = -1;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (std::abs(grid[j] - x[i]) <= 1e-9 * std::max(1.0, std::abs(grid[j]))) {
                hit = static_cast<std::int64_t>(j);
                break;
            }
        }
        if (hit < 0) return -1;
        flat = flat * static_cast<std::int64_t>(grid.size()) + hit;
    }
    return flat;
}

PointSet diagonal_points(std::int64_t n, std::span<const OrthoBasis1D> bases) {
    if (n < 2) throw ConfigError("points.spec diagonal:N needs N >= 2");
    const auto d = static_cast<int>(bases.size());
    PointSet set;
    set.points.resize(n, d);
    for (std::int64_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n - 1);
        for (int i = 0; i < d; ++i)
            set.points(k, i) = bases[static_cast<std::size_t>(i)].lower +
                               t * (bases[static_cast<std::size_t>(i)].upper -
                                    bases[static_cast<std::size_t>(i)].lower);
    }
    return set;
}

PointSet file_points(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open points file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("points file '" + path + "' is empty");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream stream(line);
        std::string cell;
        while (std::getline(stream, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("points file '" + path + "': '" + cell + "' is not a number");
            }
        }
        if (static_cast<int>(row.size()) < d)
            throw ConfigError("points file '" + path + "': row with fewer than d columns");
        row.resize(static_cast<std::size_t>(d));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("points file '" + path + "' has no rows");
    PointSet set;
    set.points.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (int i = 0; i < d; ++i) set.points(static_cast<Eigen::Index>(k), i) = rows[k][static_cast<std::size_t>(i)];
    return set;
}

} // namespace

PointSet points_from_config(const Config& config, const BSModel& model,
                            std::span<const OrthoBasis1D> bases) {
    const std::string spec = config.get_string("points.spec", "diagonal:33");
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw ConfigError("points.spec must look like diagonal:N, file:PATH or sample:N");
    const std::string kind = spec.substr(0, colon);
    const std::string arg = spec.substr(colon + 1);
    auto count_arg = [&]() -> std::int64_t {
        try {
            std::size_t used = 0;
            const std::int64_t n = std::stoll(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
            return n;
        } catch (const std::exception&) {
            throw ConfigError("points.spec: '" + arg + "' is not a count");
        }
    };

    PointSet set;
    if (kind == "diagonal") {
        set = diagonal_points(count_arg(), bases);
    } else if (kind == "file") {
        set = file_points(arg, model.d);
    } else if (kind == "sample") {
        const std::int64_t n = count_arg();
        std::vector<double> start(static_cast<std::size_t>(model.d), model.strike);
        if (config.has("points.s_start")) {
            start = config.get_doubles("points.s_start");
            if (start.size() == 1) start.assign(static_cast<std::size_t>(model.d), start[0]);
        }
        std::vector<double> lower, upper;
        for (const auto& basis : bases) {
            lower.push_back(basis.lower);
            upper.push_back(basis.upper);
        }
        set.points = sample_points(model, start, n,
                                   static_cast<std::uint64_t>(config.get_int("points.seed", 1)),
                                   lower, upper);
    } else {
        throw ConfigError("points.spec kind '" + kind + "' is not one of diagonal/file/sample");
    }

    set.grid_index.resize(static_cast<std::size_t>(set.points.rows()));
    std::vector<double> x(static_cast<std::size_t>(model.d));
    for (Eigen::Index k = 0; k < set.points.rows(); ++k) {
        for (int i = 0; i < model.d; ++i) x[static_cast<std::size_t>(i)] = set.points(k, i);
        set.grid_index[static_cast<std::size_t>(k)] = grid_flat_index(bases, x.data());
    }

    if (config.has("points.out")) {
        auto out = open_csv(config.get_string("points.out"));
        for (int i = 0; i < model.d; ++i) out << "x" << (i + 1) << (i + 1 < model.d ? "," : "\n");
        for (Eigen::Index k = 0; k < set.points.rows(); ++k)
            for (int i = 0; i < model.d; ++i)
                out << format_double(set.points(k, i)) << (i + 1 < model.d ? "," : "\n");
    }
    return set;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigError("power-law fit needs at least two (x, y) points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw NumericError("power-law fit needs positive values");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(x.size());
    PowerLawFit fit;
    fit.b = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    fit.log_a = (sy - fit.b * sx) / n;
    return fit;
}

GenTargetResult cmd_gen_target(const Config& config) {
    const std::string out = config.get_string("output.target"); // fail before pricing
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);

    PricerConfig pricer;
    pricer.n_paths = config.get_int("pricer.n_paths", 100000);
    pricer.seed = static_cast<std::uint64_t>(config.get_int("pricer.seed", 1));
    pricer.crn = config.get_bool("pricer.crn", true);

    GridTensor target = grid_target(model, bases, pricer, [](std::int64_t done, std::int64_t total) {
        std::cerr << "\rgen-target: " << done << "/" << total << " grid points" << std::flush;
        if (done == total) std::cerr << "\n";
    });
    write_grid_tensor(out, target);

    GenTargetResult result;
    result.path = out;
    result.norm = target.stored_norm().value();
    for (const auto& basis : bases) {
        result.lower.push_back(basis.lower);
        result.upper.push_back(basis.upper);
    }
    return result;
}

ExpandResult cmd_expand(const Config& config) {
    const std::string out = config.get_string("output.coeffs");
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);
    const GridTensor values = read_grid_tensor(config.get_string("input.target"));
    if (values.order() != model.d)
        throw ConfigError("expand: target file order does not match model.d");
    const GridTensor coeffs = coefficients_from_grid(values, bases);
    write_grid_tensor(out, coeffs);
    return {out, coeffs.stored_norm().value()};
}

namespace {

struct FitInputs {
    GridTensor data; ///< coefficients (coef mode) or grid values (full mode)
    double scale = 0.0;
    FitMode mode = FitMode::coef;
};

FitInputs load_fit_inputs(const Config& config, const BSModel& model,
                          std::span<const OrthoBasis1D> bases) {
    FitInputs in;
    const std::string mode = config.get_string("fit.mode", "coef");
    if (mode == "coef") {
        in.mode = FitMode::coef;
        in.data = read_grid_tensor(config.get_string("input.coeffs"));
        for (std::int64_t extent : in.data.dims())
            if (extent != bases[0].degree)
                throw ConfigError("fit: coefficient extents must equal basis.degree");
    } else if (mode == "full") {
        in.mode = FitMode::full;
        in.data = read_grid_tensor(config.get_string("input.target"));
        for (std::int64_t extent : in.data.dims())
            if (extent != bases[0].grid_count)
                throw ConfigError("fit: target extents must equal basis.n_gr");
    } else {
        throw ConfigError("fit.mode must be coef or full");
    }
    if (in.data.order() != model.d) throw ConfigError("fit: file order does not match model.d");
    in.scale = in.data.norm();
    if (in.scale == 0.0) throw NumericError("fit: zero data tensor");
    return in;
}

FitConfig fit_config_from(const Config& config) {
    FitConfig fit;
    fit.n_iter = static_cast<int>(config.get_int("fit.n_iter", 5));
    if (fit.n_iter < 1) throw ConfigError("fit.n_iter must be >= 1");
    const std::string estimator = config.get_string("fit.estimator", "exact");
    if (estimator == "exact") {
        fit.estimator = Estimator::exact;
    } else if (estimator == "shots") {
        fit.estimator = Estimator::shots;
        fit.shots = config.get_int("fit.shots", 1024);
    } else {
        throw ConfigError("fit.estimator must be exact or shots");
    }
    fit.seed = static_cast<std::uint64_t>(config.get_int("fit.seed", 1));
    if (config.has("fit.early_stop_tol")) fit.early_stop_tol = config.get_double("fit.early_stop_tol");
    fit.back_and_forth = config.get_bool("fit.back_and_forth", false);
    return fit;
}

// Recursive-SVD truncation of the coefficient tensor, widened to the circuit
// bond and normalized: the warm start for the alternating optimization.
BlockCircuit truncation_start(const GridTensor& coeffs, std::int64_t bond,
                              std::span<const OrthoBasis1D> bases, bool grid_gauge) {
    Mps mps = canonicalize(coeffs, bond).mps;
    bool needs_pad = false;
    for (std::int64_t b : mps.bonds()) needs_pad |= (b != bond);
    if (needs_pad) mps = pad_bonds(mps, bond);
    if (grid_gauge) {
        mps = to_grid_gauge(mps, bases);
    } else {
        mps.scale(1.0 / mps.norm());
    }
    return build_vmps(mps);
}

void write_trace_csv(const std::string& path, const FitReport& report, const FitConfig& fit) {
    auto out = open_csv(path);
    out << "sweep,block,fidelity,estimator,shots\n";
    const char* estimator = (fit.estimator == Estimator::exact) ? "exact" : "shots";
    const std::int64_t shots = (fit.estimator == Estimator::exact) ? 0 : fit.shots;
    for (const auto& row : report.trace)
        out << row.sweep << "," << row.block << "," << format_double(row.fidelity) << ","
            << estimator << "," << shots << "\n";
}

} // namespace

FitCmdResult cmd_fit(const Config& config) {
    const std::string mps_path = config.get_string("output.mps");
    const std::string trace_path = config.get_string("output.trace");
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);

    const std::int64_t degree = bases[0].degree;
    const std::int64_t bond = config.get_int("fit.r");
    const int m_deg = log2_exact(degree);
    const int m_bd = log2_exact(bond);
    if (m_deg < 1) throw ConfigError("fit: basis.degree must be a power of two >= 2");
    if (m_bd < 0) throw ConfigError("fit: fit.r must be a power of two");
    if (m_bd > m_deg) throw ConfigError("fit: fit.r must not exceed basis.degree");
    const FitConfig base_fit = fit_config_from(config);
    if (config.get_string("fit.mode", "coef") == "full" &&
        log2_exact(bases[0].grid_count) < 1)
        throw ConfigError("fit: basis.n_gr must be a power of two for full mode");

    const FitInputs inputs = load_fit_inputs(config, model, bases);
    FitConfig fit = base_fit;
    fit.mode = inputs.mode;
    fit.progress = [](int sweep, int block, double fidelity) {
        std::cerr << "\rfit: sweep " << sweep << " block " << block
                  << " fidelity " << fidelity << "   " << std::flush;
    };

    const std::string init = config.get_string("fit.init", "truncation");
    std::optional<BlockCircuit> start;
    if (init == "truncation") {
        const GridTensor* coeffs = &inputs.data;
        GridTensor computed;
        if (inputs.mode == FitMode::full) {
            computed = coefficients_from_grid(inputs.data, bases);
            coeffs = &computed;
        }
        start = truncation_start(*coeffs, bond, bases, inputs.mode == FitMode::full);
    } else if (init != "random") {
        throw ConfigError("fit.init must be truncation or random");
    }

    const FitLayout layout = FitLayout::mps_shape(model.d, m_deg, m_bd);
    const FitReport report =
        run_fit(inputs.data, layout, fit, bases, start ? &*start : nullptr);
    std::cerr << "\n";

    // Coef mode extracts a unit-norm chain (scale = |a|); full mode reports
    // the coefficient-gauge chain whose physical factor is the grid norm C.
    Mps out_mps = *report.mps;
    out_mps.scale(inputs.scale);
    write_mps(mps_path, out_mps);
    write_trace_csv(trace_path, report, fit);

    FitCmdResult result;
    result.mps_path = mps_path;
    result.trace_path = trace_path;
    result.final_fidelity = report.final_fidelity;
    result.dof = dof_count(model.d, degree, bond);
    result.scale = inputs.scale;
    std::cout << "fit: final fidelity " << format_double(report.final_fidelity) << ", dof "
              << result.dof << ", scale " << format_double(result.scale) << "\n";
    return result;
}

EvalResult cmd_eval(const Config& config) {
    const std::string out_path = config.get_string("output.values");
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);
    const Mps mps = read_mps(config.get_string("input.mps"));
    if (mps.order() != model.d || mps.phys() != bases[0].degree)
        throw ConfigError("eval: MPS shape does not match the configured bases");
    const double scale = config.get_double("eval.scale", 1.0);
    if (!(scale > 0.0)) throw ConfigError("eval.scale must be positive");
    const PointSet points = points_from_config(config, model, bases);

    auto out = open_csv(out_path);
    for (int i = 0; i < model.d; ++i) out << "x" << (i + 1) << ",";
    out << "value,status\n";

    EvalResult result;
    result.path = out_path;
    std::vector<double> x(static_cast<std::size_t>(model.d));
    for (Eigen::Index k = 0; k < points.points.rows(); ++k) {
        if (interrupted()) break;
        EvalRow row;
        for (int i = 0; i < model.d; ++i) {
            x[static_cast<std::size_t>(i)] = points.points(k, i);
            out << format_double(points.points(k, i)) << ",";
        }
        row.x = x;
        try {
            row.value = scale * mps_eval(mps, bases, x);
            row.ok = true;
            out << format_double(row.value) << ",ok\n";
        } catch (const ConfigError& err) {
            row.error = err.what();
            out << ",out_of_domain\n";
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

CompareResult cmd_compare(const Config& config) {
    const std::string out_path = config.get_string("output.report");
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);

    const GridTensor mc = read_grid_tensor(config.get_string("input.target"));
    const GridTensor coeffs = read_grid_tensor(config.get_string("input.coeffs"));
    const Mps mps = read_mps(config.get_string("input.mps"));
    if (mc.order() != model.d || coeffs.order() != model.d)
        throw ConfigError("compare: file orders do not match model.d");
    for (std::int64_t extent : mc.dims())
        if (extent != bases[0].grid_count)
            throw ConfigError("compare: MC grid extents must equal basis.n_gr");
    for (std::int64_t extent : coeffs.dims())
        if (extent != bases[0].degree)
            throw ConfigError("compare: coefficient extents must equal basis.degree");
    if (mps.order() != model.d || mps.phys() != bases[0].degree)
        throw ConfigError("compare: MPS shape does not match the configured bases");
    const double scale = config.get_double("compare.scale", 1.0);

    const PointSet points = points_from_config(config, model, bases);
    if (points.points.rows() == 0) throw ConfigError("compare: empty point set");

    auto out = open_csv(out_path);
    out << "index,";
    for (int i = 0; i < model.d; ++i) out << "x" << (i + 1) << ",";
    out << "tn,cos,mc\n";

    CompareResult result;
    result.path = out_path;
    std::vector<double> x(static_cast<std::size_t>(model.d));
    for (Eigen::Index k = 0; k < points.points.rows(); ++k) {
        if (interrupted()) break;
        for (int i = 0; i < model.d; ++i) x[static_cast<std::size_t>(i)] = points.points(k, i);
        const double tn = scale * mps_eval(mps, bases, x);
        const double cos_value = expansion_eval(coeffs, bases, x);
        result.max_tn_cos = std::max(result.max_tn_cos, std::abs(tn - cos_value));
        ++result.n_points;
        out << k << ",";
        for (int i = 0; i < model.d; ++i) out << format_double(x[static_cast<std::size_t>(i)]) << ",";
        out << format_double(tn) << "," << format_double(cos_value) << ",";
        const std::int64_t flat = points.grid_index[static_cast<std::size_t>(k)];
        if (flat >= 0) {
            const double mc_value = mc.entries()[static_cast<std::size_t>(flat)];
            result.max_tn_mc = std::max(result.max_tn_mc, std::abs(tn - mc_value));
            result.max_cos_mc = std::max(result.max_cos_mc, std::abs(cos_value - mc_value));
            ++result.n_grid_points;
            out << format_double(mc_value);
        }
        out << "\n";
    }
    std::cout << "compare: max|TN-MC| ";
    if (result.n_grid_points > 0)
        std::cout << format_double(result.max_tn_mc);
    else
        std::cout << "n/a";
    std::cout << ", max|COS-MC| ";
    if (result.n_grid_points > 0)
        std::cout << format_double(result.max_cos_mc);
    else
        std::cout << "n/a";
    std::cout << ", max|TN-COS| " << format_double(result.max_tn_cos) << " over "
              << result.n_points << " points (" << result.n_grid_points << " on grid)\n";
    return result;
}

ScanResult cmd_scan_dof(const Config& config) {
    const std::string out_path = config.get_string("output.scan");
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);
    const GridTensor coeffs = read_grid_tensor(config.get_string("input.coeffs"));
    if (coeffs.order() != model.d) throw ConfigError("scan-dof: file order does not match model.d");
    for (std::int64_t extent : coeffs.dims())
        if (extent != bases[0].degree)
            throw ConfigError("scan-dof: coefficient extents must equal basis.degree");
    const int m_deg = log2_exact(bases[0].degree);
    if (m_deg < 1) throw ConfigError("scan-dof: basis.degree must be a power of two >= 2");

    const std::vector<std::int64_t> mbl_list =
        config.has("scan.mbl") ? config.get_ints("scan.mbl") : std::vector<std::int64_t>{2, 3, 4, 5};
    const std::int64_t tries = config.get_int("scan.tries", 1);
    if (tries < 1) throw ConfigError("scan.tries must be >= 1");
    const FitConfig base_fit = fit_config_from(config);

    const PointSet points = points_from_config(config, model, bases);
    const double scale = coeffs.norm();
    std::vector<double> reference(static_cast<std::size_t>(points.points.rows()));
    std::vector<double> x(static_cast<std::size_t>(model.d));
    for (Eigen::Index k = 0; k < points.points.rows(); ++k) {
        for (int i = 0; i < model.d; ++i) x[static_cast<std::size_t>(i)] = points.points(k, i);
        reference[static_cast<std::size_t>(k)] = expansion_eval(coeffs, bases, x);
    }

    auto out = open_csv(out_path);
    out << "m_bl,dof,delta_max,fidelity\n";

    ScanResult result;
    result.path = out_path;
    for (std::int64_t m_bl : mbl_list) {
        if (interrupted()) break;
        const FitLayout layout = FitLayout::sliding(model.d, m_deg, static_cast<int>(m_bl));
        std::optional<FitReport> best;
        for (std::int64_t attempt = 0; attempt < tries; ++attempt) {
            FitConfig fit = base_fit;
            fit.mode = FitMode::coef;
            fit.seed = base_fit.seed + static_cast<std::uint64_t>(attempt);
            FitReport report = run_fit(coeffs, layout, fit);
            if (!best || report.final_fidelity > best->final_fidelity) best = std::move(report);
        }

        // Expand the fitted state once, then evaluate the expansion per point.
        const StateVector state =
            apply_circuit(best->circuit, StateVector::zero_state(best->circuit.n_qubits));
        GridTensor fitted(std::vector<std::int64_t>(static_cast<std::size_t>(model.d),
                                                    bases[0].degree),
                          std::vector<double>(state.amps.begin(), state.amps.end()));
        double delta = 0.0;
        for (Eigen::Index k = 0; k < points.points.rows(); ++k) {
            for (int i = 0; i < model.d; ++i) x[static_cast<std::size_t>(i)] = points.points(k, i);
            const double value = scale * expansion_eval(fitted, bases, x);
            delta = std::max(delta, std::abs(value - reference[static_cast<std::size_t>(k)]));
        }

        ScanRow row;
        row.m_bl = static_cast<int>(m_bl);
        row.dof = sliding_dof(model.d, m_deg, static_cast<int>(m_bl));
        row.delta_max = delta;
        row.fidelity = best->final_fidelity;
        result.rows.push_back(row);
        out << row.m_bl << "," << row.dof << "," << format_double(row.delta_max) << ","
            << format_double(row.fidelity) << "\n";
        out.flush();
        std::cerr << "scan-dof: m_bl " << row.m_bl << " dof " << row.dof << " delta "
                  << row.delta_max << "\n";
    }

    // Fit window defaults to everything scanned; two bounds restrict it.
    std::int64_t window_lo = mbl_list.front();
    std::int64_t window_hi = mbl_list.back();
    if (config.has("scan.fit_window")) {
        const auto window = config.get_ints("scan.fit_window");
        if (window.size() != 2) throw ConfigError("scan.fit_window needs two entries lo,hi");
        window_lo = window[0];
        window_hi = window[1];
    }
    std::vector<double> xs, ys;
    for (const auto& row : result.rows)
        if (row.m_bl >= window_lo && row.m_bl <= window_hi) {
            xs.push_back(static_cast<double>(row.dof));
            ys.push_back(row.delta_max);
        }
    if (!interrupted()) {
        result.fit = fit_power_law(xs, ys);
        result.fitted = true;
        std::cout << "scan-dof: delta_max ~ a.x^b with log a = " << format_double(result.fit.log_a)
                  << ", b = " << format_double(result.fit.b) << " (window m_bl " << window_lo
                  << ".." << window_hi << ")\n";
    }
    return result;
}

CanonResult cmd_canon(const Config& config) {
    const std::string out = config.get_string("output.mps");
    const BSModel model = model_from_config(config);
    const auto bases = bases_from_config(config, model);
    const GridTensor coeffs = read_grid_tensor(config.get_string("input.coeffs"));
    if (coeffs.order() != model.d) throw ConfigError("canon: file order does not match model.d");
    for (std::int64_t extent : coeffs.dims())
        if (extent != bases[0].degree)
            throw ConfigError("canon: coefficient extents must equal basis.degree");
    const std::int64_t bond = config.get_int("canon.r");
    const CanonicalizeResult canon = canonicalize(coeffs, bond);
    write_mps(out, canon.mps);
    CanonResult result;
    result.path = out;
    result.eps = canon.eps;
    result.norm = canon.mps.norm();
    std::cout << "canon: bonds";
    for (std::int64_t b : canon.mps.bonds()) std::cout << " " << b;
    std::cout << ", discarded weight";
    for (double e : canon.eps) std::cout << " " << format_double(e);
    std::cout << "\n";
    return result;
}

namespace {

struct ParsedArgs {
    std::string verb;
    Config config;
};

void apply_shorthand(Config& config, const std::string& verb, const std::string& key,
                     const std::string& value) {
    if (key == "in") {
        if (verb == "expand") {
            config.set("input.target", value);
        } else if (verb == "fit") {
            config.set("input.coeffs", value);
            config.set("input.target", value);
        } else if (verb == "eval") {
            config.set("input.mps", value);
        } else if (verb == "canon" || verb == "scan-dof") {
            config.set("input.coeffs", value);
        } else {
            throw ConfigError("--in is not meaningful for '" + verb + "'");
        }
        return;
    }
    if (key == "out") {
        static const std::map<std::string, std::string> out_keys = {
            {"gen-target", "output.target"}, {"expand", "output.coeffs"},
            {"fit", "output.mps"},           {"eval", "output.values"},
            {"compare", "output.report"},    {"scan-dof", "output.scan"},
            {"canon", "output.mps"}};
        const auto it = out_keys.find(verb);
        if (it == out_keys.end()) throw ConfigError("--out is not meaningful for '" + verb + "'");
        config.set(it->second, value);
        return;
    }
    if (key == "seed") {
        config.set("pricer.seed", value);
        config.set("fit.seed", value);
        config.set("points.seed", value);
        return;
    }
    if (key == "threads") {
        config.set("threads", value);
        return;
    }
    if (key == "points") {
        config.set("points.spec", value);
        return;
    }
    if (key == "scale") {
        config.set(verb == "compare" ? "compare.scale" : "eval.scale", value);
        return;
    }
    if (key == "mc") {
        config.set("input.target", value);
        return;
    }
    if (key == "cos") {
        config.set("input.coeffs", value);
        return;
    }
    if (key == "mps") {
        config.set("input.mps", value);
        return;
    }
    if (key == "trace") {
        config.set("output.trace", value);
        return;
    }
    if (key == "r") {
        config.set(verb == "canon" ? "canon.r" : "fit.r", value);
        return;
    }
    if (key == "mbl") {
        config.set("scan.mbl", value);
        return;
    }
    if (key == "tries") {
        config.set("scan.tries", value);
        return;
    }
    if (key == "fit-window") {
        config.set("scan.fit_window", value);
        return;
    }
    throw ConfigError("unknown flag --" + key);
}

ParsedArgs parse_args(const std::vector<std::string>& args) {
    if (args.empty())
        throw ConfigError(
            "usage: ampex <gen-target|expand|fit|eval|compare|scan-dof|canon> [flags]");
    ParsedArgs parsed;
    parsed.verb = args[0];

    // First pass: --config loads the file, everything else overrides it.
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a path");
            parsed.config = Config::from_file(args[i + 1]);
            break;
        }
    }
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string token = args[i];
        if (token.rfind("--", 0) != 0)
            throw ConfigError("unexpected positional argument '" + token + "'");
        token = token.substr(2);
        std::string value;
        const auto eq = token.find('=');
        if (eq != std::string::npos) {
            value = token.substr(eq + 1);
            token = token.substr(0, eq);
        } else {
            if (token == "help") continue;
            if (i + 1 >= args.size()) throw ConfigError("flag --" + token + " needs a value");
            value = args[++i];
        }
        if (token == "config") continue; // handled above
        if (token == "set") {
            const auto inner = value.find('=');
            if (inner == std::string::npos) throw ConfigError("--set expects key=value");
            parsed.config.set(value.substr(0, inner), value.substr(inner + 1));
            continue;
        }
        if (token.find('.') != std::string::npos) {
            parsed.config.set(token, value); // dotted name = config key
            continue;
        }
        apply_shorthand(parsed.config, parsed.verb, token, value);
    }

    const std::int64_t threads = parsed.config.get_int("threads", 1);
    if (threads < 1) throw ConfigError("threads must be >= 1");
    return parsed;
}

const char* kUsage =
    "ampex - amplitude-encoded function extraction via MPS fits\n"
    "\n"
    "usage: ampex <verb> [--config FILE] [--set key=value] [--key.dotted value] [flags]\n"
    "verbs:\n"
    "  gen-target   price the worst-of put on the tensor grid -> AMPX file\n"
    "  expand       grid values -> orthogonal expansion coefficients\n"
    "  fit          alternating-SVD circuit fit -> AMPM file + fidelity CSV\n"
    "  eval         evaluate a fitted MPS at points -> CSV\n"
    "  compare      TN vs COS vs MC report -> CSV\n"
    "  scan-dof     sliding-block DOF scan with power-law fit -> CSV\n"
    "  canon        dense coefficients -> truncated canonical MPS\n";

} // namespace

int run_command(const std::vector<std::string>& args) {
    clear_interrupt(); // a fresh command starts un-interrupted
    try {
        if (args.empty() || args[0] == "--help" || args[0] == "help") {
            std::cout << kUsage;
            return args.empty() ? 2 : 0;
        }
        const ParsedArgs parsed = parse_args(args);
        const std::string& verb = parsed.verb;
        if (verb == "gen-target") {
            const auto result = cmd_gen_target(parsed.config);
            std::cout << "gen-target: wrote " << result.path << " (norm "
                      << format_double(result.norm) << ")\nbounds:";
            for (std::size_t i = 0; i < result.lower.size(); ++i)
                std::cout << " [" << format_double(result.lower[i]) << ", "
                          << format_double(result.upper[i]) << "]";
            std::cout << "\n";
        } else if (verb == "expand") {
            const auto result = cmd_expand(parsed.config);
            std::cout << "expand: wrote " << result.path << " (norm "
                      << format_double(result.norm) << ")\n";
        } else if (verb == "fit") {
            cmd_fit(parsed.config);
        } else if (verb == "eval") {
            const auto result = cmd_eval(parsed.config);
            std::cout << "eval: wrote " << result.path << " (" << result.rows.size()
                      << " rows)\n";
        } else if (verb == "compare") {
            cmd_compare(parsed.config);
        } else if (verb == "scan-dof") {
            cmd_scan_dof(parsed.config);
        } else if (verb == "canon") {
            cmd_canon(parsed.config);
        } else {
            std::cerr << "unknown verb '" << verb << "'\n" << kUsage;
            return 2;
        }
        return interrupted() ? 130 : 0;
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const NumericError& err) {
        std::cerr << "numeric failure: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    }
}

int run_main(int argc, char** argv) {
    std::signal(SIGINT, handle_sigint);
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args);
}

} // namespace ampex::cli
