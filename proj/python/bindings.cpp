// Python bindings. numpy arrays use the library layout directly:
// 2-D (nx, ny) and 3-D (nz, nx, ny), C order, float64.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "snapcube/admm.hpp"
#include "snapcube/error.hpp"
#include "snapcube/interferometer.hpp"
#include "snapcube/io.hpp"
#include "snapcube/pipeline.hpp"
#include "snapcube/sensing.hpp"
#include "snapcube/shear.hpp"

namespace py = pybind11;
namespace sc = snapcube;
namespace pl = snapcube::pipeline;

namespace {

using NdArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

sc::Array2 to_array2(const NdArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array (nx, ny)");
    sc::Array2 out(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::memcpy(out.data(), a.data(), out.size() * sizeof(double));
    return out;
}

sc::Array3 to_array3(const NdArray& a) {
    if (a.ndim() != 3) throw py::value_error("expected a 3-D array (nz, nx, ny)");
    sc::Array3 out(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(2)),
                   static_cast<std::size_t>(a.shape(0)));
    std::memcpy(out.data(), a.data(), out.size() * sizeof(double));
    return out;
}

NdArray to_numpy(const sc::Array2& a) {
    NdArray out({a.nx(), a.ny()});
    std::memcpy(out.mutable_data(), a.data(), a.size() * sizeof(double));
    return out;
}

NdArray to_numpy(const sc::Array3& a) {
    NdArray out({a.nz(), a.nx(), a.ny()});
    std::memcpy(out.mutable_data(), a.data(), a.size() * sizeof(double));
    return out;
}

sc::CodedAperture aperture_of(const NdArray& pattern, int step) {
    sc::CodedAperture ap;
    ap.pattern = to_array2(pattern);
    ap.dispersion_step = step;
    return ap;
}

pl::Json parse(const std::string& text) { return text.empty() ? pl::Json::object() : pl::Json::parse(text); }

py::dict solve_result(const sc::SolveResult& r) {
    py::dict d;
    d["sheared"] = to_numpy(r.sheared);
    d["residual_history"] = r.state.residual_history;
    d["objective_history"] = r.state.objective_history;
    d["iterations"] = r.state.iteration;
    d["converged"] = r.converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "snapshot interferometric 3D imaging core";

    py::register_exception<sc::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<sc::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<sc::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<sc::IoError>(m, "IoError", PyExc_OSError);

    py::class_<sc::SensingOperator>(m, "SensingOperator")
        .def(py::init([](const NdArray& pattern, std::size_t num_channels, int dispersion_step) {
                 return sc::SensingOperator(aperture_of(pattern, dispersion_step), num_channels);
             }),
             py::arg("pattern"), py::arg("num_channels"), py::arg("dispersion_step") = 1)
        .def_property_readonly("nx", &sc::SensingOperator::nx)
        .def_property_readonly("ny", &sc::SensingOperator::ny)
        .def_property_readonly("num_channels", &sc::SensingOperator::num_channels)
        .def_property_readonly("measurement_width", &sc::SensingOperator::measurement_width)
        .def_property_readonly("psi", [](const sc::SensingOperator& op) { return to_numpy(op.psi()); })
        .def_property_readonly("pattern", [](const sc::SensingOperator& op) { return to_numpy(op.aperture().pattern); })
        .def("apply", [](const sc::SensingOperator& op, const NdArray& x) { return to_numpy(op.apply(to_array3(x))); })
        .def("apply_adjoint",
             [](const sc::SensingOperator& op, const NdArray& y) { return to_numpy(op.apply_adjoint(to_array2(y))); })
        .def("forward", [](const sc::SensingOperator& op, const NdArray& x) { return to_numpy(op.forward(to_array3(x))); })
        .def("adjoint", [](const sc::SensingOperator& op, const NdArray& y) { return to_numpy(op.adjoint(to_array2(y))); })
        .def("normalized_adjoint", [](const sc::SensingOperator& op, const NdArray& y) {
            return to_numpy(op.normalized_adjoint(to_array2(y)));
        });

    m.def("random_binary_aperture",
          [](std::size_t nx, std::size_t ny, std::size_t nl, int step, std::uint64_t seed, double fill) {
              return to_numpy(sc::random_binary_aperture(nx, ny, nl, step, seed, fill).pattern);
          },
          py::arg("nx"), py::arg("ny"), py::arg("num_channels"), py::arg("dispersion_step") = 1, py::arg("seed") = 1,
          py::arg("fill") = 0.5, "Binary pattern at measurement width.");
    m.def("dense_oracle", [](const sc::SensingOperator& op) {
        const auto d = sc::dense_oracle(op);
        NdArray out({d.rows, d.cols});
        for (std::size_t r = 0; r < d.rows; ++r)
            for (std::size_t c = 0; c < d.cols; ++c) out.mutable_at(r, c) = d(r, c);
        return out;
    });
    m.def("shear", [](const NdArray& x, int step) { return to_numpy(sc::shear(to_array3(x), step)); },
          py::arg("cube"), py::arg("dispersion_step") = 1);
    m.def("unshear", [](const NdArray& x, int step) { return to_numpy(sc::unshear(to_array3(x), step)); },
          py::arg("cube"), py::arg("dispersion_step") = 1);

    m.def("x_update",
          [](const NdArray& y, const sc::SensingOperator& op, const NdArray& zt, double eta, double tau) {
              return to_numpy(sc::x_update(to_array2(y), op, to_array3(zt), eta, tau));
          },
          py::arg("y"), py::arg("op"), py::arg("ztilde"), py::arg("eta"), py::arg("tau"));
    m.def("solve",
          [](const NdArray& y, const sc::SensingOperator& op, const std::string& config_json) {
              const sc::SolverConfig cfg = pl::parse_solver_config(parse(config_json));
              sc::SolveResult r;
              const sc::Array2 ya = to_array2(y);
              {
                  py::gil_scoped_release release;
                  r = sc::solve(ya, op, cfg);
              }
              return solve_result(r);
          },
          py::arg("y"), py::arg("op"), py::arg("config_json") = "",
          "ADMM reconstruction in the sheared frame; config as a JSON object string.");

    m.def("encode_depth",
          [](const NdArray& volume, double plane_spacing_um, double center_nm, double spacing_nm, std::size_t nl,
             double fwhm_nm, double reference_intensity) {
              sc::ReflectivityVolume v;
              v.data = to_array3(volume);
              v.depth.num_planes = v.data.nz();
              v.depth.plane_spacing_um = plane_spacing_um;
              const sc::SpectralGrid g{center_nm, spacing_nm, nl};
              const auto e = sc::encode_depth(v, sc::gaussian_source(g, fwhm_nm, reference_intensity));
              py::dict d;
              d["total"] = to_numpy(e.total.data);
              d["ac"] = to_numpy(e.ac.data);
              d["dc_reference"] = to_numpy(e.dc_reference.data);
              d["dc_sample"] = to_numpy(e.dc_sample.data);
              return d;
          },
          py::arg("volume"), py::arg("plane_spacing_um"), py::arg("center_wavelength_nm"),
          py::arg("channel_spacing_nm"), py::arg("num_channels"), py::arg("fwhm_bandwidth_nm") = 20.0,
          py::arg("reference_intensity") = 1.0);
    m.def("decode_depth",
          [](const NdArray& ac, double center_nm, double spacing_nm) {
              sc::SpectralCube c;
              c.data = to_array3(ac);
              c.grid = {center_nm, spacing_nm, c.data.nz()};
              const auto d = sc::decode_depth(c);
              return py::make_tuple(to_numpy(d.amplitude), d.depth.plane_spacing_um);
          },
          py::arg("ac"), py::arg("center_wavelength_nm"), py::arg("channel_spacing_nm"),
          "Returns (amplitude (planes, nx, ny), plane spacing in um).");
    m.def("axial_resolution_um", &sc::axial_resolution_um);
    m.def("theoretical_sensitivity_db", &sc::theoretical_sensitivity_db);

    m.def("simulate",
          [](const std::string& config_json) {
              const pl::SimulateConfig cfg = pl::parse_simulate_config(parse(config_json));
              const pl::Simulation s = pl::simulate(cfg);
              py::dict d;
              d["measurement"] = to_numpy(s.raw.image);
              d["dc_reference"] = to_numpy(*s.raw.dc_reference);
              d["dc_sample"] = to_numpy(*s.raw.dc_sample);
              d["truth_ac"] = to_numpy(s.truth_ac.data);
              d["truth_volume"] = to_numpy(s.volume.data);
              d["mask"] = to_numpy(s.aperture.pattern);
              d["photon_scale"] = s.photon_scale;
              return d;
          },
          py::arg("config_json") = "");
    m.def("run_dataset",
          [](const std::string& config_json, const std::filesystem::path& out) {
              pl::run_dataset(pl::parse_dataset_config(parse(config_json)), out);
          },
          py::arg("config_json"), py::arg("out"));

    m.def("read_array",
          [](const std::filesystem::path& stem) -> py::tuple {
              sc::io::Header h = sc::io::read_header(stem);
              py::dict attrs;
              for (const auto& [k, v] : h.attrs) attrs[py::str(k)] = v;
              if (h.shape.size() == 2) return py::make_tuple(to_numpy(sc::io::read_array2(stem)), attrs);
              return py::make_tuple(to_numpy(sc::io::read_array3(stem)), attrs);
          },
          py::arg("stem"), "Reads a container; returns (array, attributes).");
    m.def("write_array",
          [](const std::filesystem::path& stem, const NdArray& a, const std::map<std::string, std::string>& attrs) {
              if (a.ndim() == 2) {
                  sc::io::write_array(stem, to_array2(a), attrs);
              } else {
                  sc::io::write_array(stem, to_array3(a), attrs);
              }
          },
          py::arg("stem"), py::arg("array"), py::arg("attrs") = std::map<std::string, std::string>{});
}
