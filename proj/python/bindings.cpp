#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ampex/circuit.hpp"
#include "ampex/errors.hpp"
#include "ampex/finance.hpp"
#include "ampex/fit.hpp"
#include "ampex/io.hpp"
#include "ampex/mps.hpp"
#include "ampex/ortho.hpp"

namespace py = pybind11;
using namespace ampex;

namespace {

GridTensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& array) {
    std::vector<std::int64_t> dims(array.ndim());
    for (py::ssize_t i = 0; i < array.ndim(); ++i) dims[static_cast<std::size_t>(i)] = array.shape(i);
    std::vector<double> entries(array.data(), array.data() + array.size());
    return GridTensor(std::move(dims), std::move(entries));
}

py::array_t<double> array_from_tensor(const GridTensor& tensor) {
    std::vector<py::ssize_t> shape(tensor.dims().begin(), tensor.dims().end());
    py::array_t<double> array(shape);
    std::copy(tensor.entries().begin(), tensor.entries().end(), array.mutable_data());
    return array;
}

std::vector<double> point_from_sequence(const std::vector<double>& x) { return x; }

BSModel model_from_kwargs(int d, double rate, const std::vector<double>& sigma, double rho,
                          double strike, double maturity) {
    BSModel model;
    model.d = d;
    model.rate = rate;
    model.sigma = sigma.size() == 1 ? std::vector<double>(static_cast<std::size_t>(d), sigma[0])
                                    : sigma;
    model.rho = Matrix::Constant(d, d, rho);
    for (int i = 0; i < d; ++i) model.rho(i, i) = 1.0;
    model.strike = strike;
    model.maturity = maturity;
    model.validate();
    return model;
}

} // namespace

PYBIND11_MODULE(_ampex, m) {
    m.doc() = "Extraction of amplitude-encoded multivariate functions via orthogonal "
              "expansions and matrix-product-state circuit fits.";

    py::register_exception<ConfigError>(m, "AmpexConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "AmpexNumericError", PyExc_ArithmeticError);

    py::class_<OrthoBasis1D>(m, "OrthoBasis1D")
        .def_readonly("kind", &OrthoBasis1D::kind)
        .def_readonly("lower", &OrthoBasis1D::lower)
        .def_readonly("upper", &OrthoBasis1D::upper)
        .def_readonly("degree", &OrthoBasis1D::degree)
        .def_readonly("grid_count", &OrthoBasis1D::grid_count)
        .def_readonly("grid", &OrthoBasis1D::grid)
        .def_readonly("c", &OrthoBasis1D::c)
        .def("eval", [](const OrthoBasis1D& basis, std::int64_t l, double x) {
            return eval_basis(basis, l, x);
        })
        .def("orthogonality_deviation",
             [](const OrthoBasis1D& basis) { return check_discrete_orthogonality(basis); });

    m.def("make_cosine_basis", &make_cosine_basis, py::arg("lower"), py::arg("upper"),
          py::arg("degree"), py::arg("grid_count"));

    m.def(
        "coefficients_from_grid",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values,
           const std::vector<OrthoBasis1D>& bases) {
            return array_from_tensor(coefficients_from_grid(tensor_from_array(values), bases));
        },
        py::arg("values"), py::arg("bases"));

    m.def(
        "expansion_eval",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& coeffs,
           const std::vector<OrthoBasis1D>& bases, const std::vector<double>& x) {
            return expansion_eval(tensor_from_array(coeffs), bases, point_from_sequence(x));
        },
        py::arg("coeffs"), py::arg("bases"), py::arg("x"));

    py::class_<Mps>(m, "Mps")
        .def_property_readonly("order", &Mps::order)
        .def_property_readonly("phys", &Mps::phys)
        .def_property_readonly("bonds", [](const Mps& mps) { return mps.bonds(); })
        .def_property_readonly("norm", &Mps::norm)
        .def("scale", &Mps::scale)
        .def("reconstruct",
             [](const Mps& mps) { return array_from_tensor(reconstruct_dense(mps)); })
        .def("eval",
             [](const Mps& mps, const std::vector<OrthoBasis1D>& bases,
                const std::vector<double>& x) { return mps_eval(mps, bases, x); })
        .def("right_canonical_deviation",
             [](const Mps& mps) { return check_right_canonical(mps); })
        .def("save", [](const Mps& mps, const std::string& path) { write_mps(path, mps); });

    m.def("load_mps", &read_mps, py::arg("path"));
    m.def(
        "canonicalize",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& dense,
           std::int64_t r_max) {
            auto result = canonicalize(tensor_from_array(dense), r_max);
            return py::make_tuple(std::move(result.mps), result.eps);
        },
        py::arg("dense"), py::arg("r_max"),
        "Recursive-SVD right-canonical decomposition; returns (mps, discarded_weights).");
    m.def("dof_count", &dof_count, py::arg("d"), py::arg("degree"), py::arg("bond"));
    m.def("sliding_dof", &sliding_dof, py::arg("d"), py::arg("m_deg"), py::arg("m_bl"));
    m.def(
        "fidelity_dense",
        [](const Mps& mps,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& target) {
            return fidelity_dense(mps, tensor_from_array(target));
        },
        py::arg("mps"), py::arg("target"));

    m.def(
        "run_fit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& data,
           const std::vector<OrthoBasis1D>& bases, std::int64_t bond, int n_iter,
           const std::string& mode, const std::string& estimator, std::int64_t shots,
           std::uint64_t seed) {
            const GridTensor tensor = tensor_from_array(data);
            FitConfig config;
            config.n_iter = n_iter;
            config.seed = seed;
            if (mode == "coef") {
                config.mode = FitMode::coef;
            } else if (mode == "full") {
                config.mode = FitMode::full;
            } else {
                throw ConfigError("mode must be 'coef' or 'full'");
            }
            if (estimator == "exact") {
                config.estimator = Estimator::exact;
            } else if (estimator == "shots") {
                config.estimator = Estimator::shots;
                config.shots = shots;
            } else {
                throw ConfigError("estimator must be 'exact' or 'shots'");
            }
            const std::int64_t degree =
                config.mode == FitMode::coef ? tensor.dims()[0] : bases[0].degree;
            const int m_deg = log2_exact(degree);
            const int m_bd = log2_exact(bond);
            if (m_deg < 1 || m_bd < 0 || m_bd > m_deg)
                throw ConfigError("degree and bond must be powers of two with bond <= degree");
            const FitLayout layout =
                FitLayout::mps_shape(static_cast<int>(tensor.order()), m_deg, m_bd);
            FitReport report = run_fit(tensor, layout, config, bases);
            py::dict out;
            out["final_fidelity"] = report.final_fidelity;
            out["sweep_fidelity"] = report.sweep_fidelity;
            out["mps"] = std::move(*report.mps);
            out["wall_seconds"] = report.wall_seconds;
            return out;
        },
        py::arg("data"), py::arg("bases"), py::arg("bond"), py::arg("n_iter") = 5,
        py::arg("mode") = "coef", py::arg("estimator") = "exact", py::arg("shots") = 1024,
        py::arg("seed") = 1,
        "Alternating-SVD fit of an MPS-shape circuit to coefficient data ('coef') or grid "
        "values ('full'); returns a dict with the fitted MPS in coefficient gauge.");

    py::class_<BSModel>(m, "BSModel")
        .def(py::init(&model_from_kwargs), py::arg("d"), py::arg("rate") = 0.0,
             py::arg("sigma") = std::vector<double>{0.2}, py::arg("rho") = 0.0,
             py::arg("strike") = 100.0, py::arg("maturity") = 1.0)
        .def_readonly("d", &BSModel::d)
        .def_readonly("rate", &BSModel::rate)
        .def_readonly("sigma", &BSModel::sigma)
        .def_readonly("strike", &BSModel::strike)
        .def_readonly("maturity", &BSModel::maturity);

    m.def(
        "worst_of_put_payoff",
        [](const std::vector<double>& s, double strike) { return worst_of_put_payoff(s, strike); },
        py::arg("s"), py::arg("strike"));
    m.def(
        "mc_price",
        [](const BSModel& model, const std::vector<double>& s0, std::int64_t n_paths,
           std::uint64_t seed) {
            PricerConfig config;
            config.n_paths = n_paths;
            config.seed = seed;
            const McResult result = mc_price_stats(model, s0, config);
            return py::make_tuple(result.price, result.std_error);
        },
        py::arg("model"), py::arg("s0"), py::arg("n_paths") = 100000, py::arg("seed") = 1,
        "Discounted worst-of put Monte Carlo price; returns (price, std_error).");
    m.def(
        "domain_bounds",
        [](const BSModel& model, double epsilon) {
            const DomainBounds bounds = domain_bounds(model, epsilon);
            return py::make_tuple(bounds.lower, bounds.upper);
        },
        py::arg("model"), py::arg("epsilon") = 0.01);
    m.def(
        "grid_target",
        [](const BSModel& model, const std::vector<OrthoBasis1D>& bases, std::int64_t n_paths,
           std::uint64_t seed, bool crn) {
            PricerConfig config;
            config.n_paths = n_paths;
            config.seed = seed;
            config.crn = crn;
            return array_from_tensor(grid_target(model, bases, config));
        },
        py::arg("model"), py::arg("bases"), py::arg("n_paths") = 100000, py::arg("seed") = 1,
        py::arg("crn") = true);
    m.def(
        "sample_points",
        [](const BSModel& model, const std::vector<double>& start, std::int64_t n,
           std::uint64_t seed, const std::vector<double>& lower,
           const std::vector<double>& upper) {
            const Matrix points = sample_points(model, start, n, seed, lower, upper);
            py::array_t<double> out({static_cast<py::ssize_t>(points.rows()),
                                     static_cast<py::ssize_t>(points.cols())});
            for (Eigen::Index i = 0; i < points.rows(); ++i)
                for (Eigen::Index j = 0; j < points.cols(); ++j)
                    out.mutable_at(i, j) = points(i, j);
            return out;
        },
        py::arg("model"), py::arg("start"), py::arg("n"), py::arg("seed"), py::arg("lower"),
        py::arg("upper"));

    m.def(
        "save_tensor",
        [](const std::string& path,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& array,
           bool with_norm) {
            GridTensor tensor = tensor_from_array(array);
            if (with_norm) normalization_constant(tensor);
            write_grid_tensor(path, tensor);
        },
        py::arg("path"), py::arg("array"), py::arg("with_norm") = true);
    m.def(
        "load_tensor",
        [](const std::string& path) { return array_from_tensor(read_grid_tensor(path)); },
        py::arg("path"));
}
