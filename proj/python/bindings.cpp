#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sunlit/binning.hpp"
#include "sunlit/cli.hpp"
#include "sunlit/dataprep.hpp"
#include "sunlit/ephemeris.hpp"
#include "sunlit/error.hpp"
#include "sunlit/image.hpp"
#include "sunlit/metrics.hpp"

namespace py = pybind11;
using namespace sunlit;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Image to_image(const RowMatrix& a) {
    Image img(static_cast<int>(a.cols()), static_cast<int>(a.rows()));
    img.pixels() = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    return img;
}

RowMatrix to_array(const Image& img) {
    return Eigen::Map<const RowMatrix>(img.pixels().data(), img.height(), img.width());
}

binning::OutOfRange policy(bool clamp) { return clamp ? binning::OutOfRange::Clamp : binning::OutOfRange::Error; }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Solar altitude labeling, altitude binning and image statistics";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<RangeError>(m, "RangeError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<PipelineError>(m, "PipelineError", base.ptr());

    m.def(
        "solar_altitude",
        [](double lat, double lon, const std::string& utc, bool refraction) {
            double a = ephemeris::solar_altitude({lat, lon, UtcTime::parse(utc)}).altitude_deg;
            return refraction ? a + ephemeris::refraction_correction(a) : a;
        },
        py::arg("lat"), py::arg("lon"), py::arg("utc"), py::arg("refraction") = false,
        "Solar altitude in degrees for an ISO-8601 UTC timestamp.");
    m.def(
        "julian_day", [](const std::string& utc) { return ephemeris::julian_day(UtcTime::parse(utc)); },
        py::arg("utc"));

    py::class_<binning::BinScheme>(m, "BinScheme")
        .def(py::init<std::vector<double>>(), py::arg("edges"))
        .def_static("parse", &binning::BinScheme::parse, py::arg("spec"), py::arg("a_min") = py::none(),
                    py::arg("a_max") = py::none())
        .def_property_readonly("edges",
                               [](const binning::BinScheme& s) {
                                   return std::vector<double>(s.edges().begin(), s.edges().end());
                               })
        .def_property_readonly("bins", &binning::BinScheme::bins)
        .def("interval", &binning::BinScheme::interval)
        .def("to_json", &binning::BinScheme::to_json)
        .def("__eq__", [](const binning::BinScheme& a, const binning::BinScheme& b) { return a == b; })
        .def("__repr__", [](const binning::BinScheme& s) { return "BinScheme(" + s.to_json() + ")"; });

    m.def("default_scheme", &binning::default_scheme, py::arg("a_min"), py::arg("a_max"));
    m.def("recommended_scheme", &binning::recommended_scheme, py::arg("a_min"), py::arg("a_max"));
    m.def(
        "normalize",
        [](double a, const binning::BinScheme& s, bool clamp) {
            const auto n = binning::normalize(a, s, policy(clamp));
            return py::make_tuple(n.bin_index, n.residual, n.value);
        },
        py::arg("altitude_deg"), py::arg("scheme"), py::arg("clamp") = false,
        "Returns (bin, residual, normalized value).");
    m.def("denormalize", &binning::denormalize, py::arg("value"), py::arg("scheme"));
    m.def(
        "resample_balanced",
        [](const std::vector<double>& altitudes, const binning::BinScheme& s, std::optional<std::size_t> target,
           std::uint64_t seed) { return binning::resample_balanced(altitudes, s, target, seed); },
        py::arg("altitudes"), py::arg("scheme"), py::arg("target_per_bin") = py::none(), py::arg("seed"));

    m.def(
        "generate_scene",
        [](double altitude, std::uint64_t seed, int width, int height) {
            dataprep::SceneConfig cfg;
            cfg.width = width;
            cfg.height = height;
            return to_array(dataprep::generate_scene(altitude, cfg, seed).image);
        },
        py::arg("altitude_deg"), py::arg("seed"), py::arg("width") = 32, py::arg("height") = 32,
        "Synthetic street scene as a (height, width) array in [0, 1].");

    m.def(
        "estimate_noise_sigma", [](const RowMatrix& a) { return metrics::estimate_noise_sigma(to_image(a)); },
        py::arg("image"));
    m.def("delta_sigma", [](const std::vector<double>& s) { return metrics::delta_sigma(s); }, py::arg("sigmas"));
    m.def(
        "frechet_gaussian",
        [](const Eigen::VectorXd& mu1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& mu2,
           const Eigen::MatrixXd& c2) { return metrics::frechet_gaussian({mu1, c1, 2}, {mu2, c2, 2}); },
        py::arg("mean1"), py::arg("cov1"), py::arg("mean2"), py::arg("cov2"));
    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) { return metrics::spearman(x, y); },
        py::arg("x"), py::arg("y"));

    m.def(
        "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
        "Runs the command-line tool in-process and returns its exit code.");
    m.attr("__version__") = cli::kToolVersion;
}
