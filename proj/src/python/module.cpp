#include "canard_lab/cli.hpp"
#include "canard_lab/connection_branch.hpp"
#include "canard_lab/hopf_melnikov.hpp"
#include "canard_lab/layer_dynamics.hpp"
#include "canard_lab/shilnikov_transition.hpp"
#include "canard_lab/slow_manifold.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace canard;

namespace {

py::object to_python(const nlohmann::json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

py::array_t<double> points(const std::vector<Point3>& pts)
{
    py::array_t<double> a({py::ssize_t(pts.size()), py::ssize_t(3)});
    auto m = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int k = 0; k < 3; ++k) m(i, k) = pts[i][k];
    return a;
}

py::array_t<double> states(const Trajectory& tr)
{
    const auto& s = tr.states();
    py::ssize_t dim = s.empty() ? 0 : py::ssize_t(s.front().size());
    py::array_t<double> a({py::ssize_t(s.size()), dim});
    auto m = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < s.size(); ++i)
        for (py::ssize_t k = 0; k < dim; ++k) m(i, k) = s[i][k];
    return a;
}

Tolerances tolerances(double abs_tol, double rel_tol)
{
    Tolerances t;
    t.abs_tol = abs_tol;
    t.rel_tol = rel_tol;
    t.validate();
    return t;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Canard cycles near a folded saddle-node of type II";

    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<SlowFastSystem>(m, "SlowFastSystem")
        .def_static("canonical", &SlowFastSystem::canonical, "a1"_a = 0.0, "a2"_a = 1.0)
        .def_static("from_json", [](const std::string& s) { return system_from_json(nlohmann::json::parse(s)); })
        .def("to_json", [](const SlowFastSystem& s) { return system_to_json(s).dump(); })
        .def_property_readonly("a1", &SlowFastSystem::a1)
        .def_property_readonly("a2", &SlowFastSystem::a2)
        .def_property_readonly("lam", &SlowFastSystem::lambda);

    m.def("first_integral", &first_integral, "x2"_a, "z2"_a);
    m.def("layer_eigenvalues", [](const SlowFastSystem& sys, double y2) {
        auto e = layer_eigenvalues(sys, y2);
        return std::vector<std::complex<double>>(e.begin(), e.end());
    }, "sys"_a, "y2"_a = 0.0);
    m.def("periodic_orbit", [](double h, double abs_tol, double rel_tol) {
        auto o = periodic_orbit(h, tolerances(abs_tol, rel_tol));
        py::dict d;
        d["h"] = o.h;
        d["period"] = o.period;
        d["H_drift"] = o.H_drift;
        d["t"] = o.samples.times();
        d["states"] = states(o.samples);
        return d;
    }, "h"_a, "abs_tol"_a = 1e-11, "rel_tol"_a = 1e-11);

    m.def("slow_manifold", [](const SlowFastSystem& sys, double r2, double mu2, double nu, int order) {
        ManifoldConfig cfg;
        cfg.nu = nu;
        cfg.N = order;
        return to_python(manifold_to_json(solve_invariant_series(sys, r2, mu2, cfg)));
    }, "sys"_a, "r2"_a, "mu2"_a = 0.0, "nu"_a = 0.2, "order"_a = 30);

    m.def("hopf_mu", [](const SlowFastSystem& sys, double r2) { return hopf_mu(sys, r2); }, "sys"_a, "r2"_a);
    m.def("hopf_by_eigenvalues", [](const SlowFastSystem& sys, double r2, double mu_seed) {
        return hopf_by_eigenvalues(sys, r2, mu_seed).mu;
    }, "sys"_a, "r2"_a, "mu_seed"_a = 0.0);

    py::class_<SmallBranchPoint>(m, "SmallBranchPoint")
        .def_readonly("h", &SmallBranchPoint::h)
        .def_readonly("r2", &SmallBranchPoint::r2)
        .def_readonly("y2_bar", &SmallBranchPoint::y2_bar)
        .def_readonly("mu2_bar", &SmallBranchPoint::mu2_bar)
        .def_readonly("residual", &SmallBranchPoint::residual)
        .def_readonly("iterations", &SmallBranchPoint::iterations);
    m.def("solve_small_branch", [](const SlowFastSystem& sys, double h, double r2) {
        return solve_small_branch(sys, h, r2);
    }, "sys"_a, "h"_a, "r2"_a);

    m.def("shilnikov", [](const SlowFastSystem& sys, double mu, double r10, double y11, double tau, double eps11,
                          const std::string& side, int degree) {
        if (side != "attracting" && side != "repelling") throw ConfigError("side is attracting or repelling");
        auto nf = normal_form(sys, side == "attracting" ? Side::attracting : Side::repelling, mu, degree);
        ShilnikovBC bc;
        bc.mu = mu;
        bc.r10 = r10;
        bc.y11 = y11;
        bc.tau = tau;
        bc.eps11 = eps11;
        bc.lambda = nf.lambda;
        return to_python(shilnikov_to_json(shilnikov_solve(nf.L0, nf.L1, bc)));
    }, "sys"_a, "mu"_a = 0.0, "r10"_a = 0.05, "y11"_a = 0.1, "tau"_a = 10.0, "eps11"_a = 0.25,
       "side"_a = "attracting", "degree"_a = 10);

    py::class_<BranchPoint>(m, "BranchPoint")
        .def_readonly("h", &BranchPoint::h)
        .def_readonly("eps", &BranchPoint::eps)
        .def_readonly("eps1", &BranchPoint::eps1)
        .def_readonly("y1_star", &BranchPoint::y1_star)
        .def_readonly("mu_star", &BranchPoint::mu_star)
        .def_readonly("residual", &BranchPoint::residual)
        .def_readonly("det_scaled", &BranchPoint::det_scaled)
        .def_readonly("iterations", &BranchPoint::iterations);
    m.def("solve_connection", [](const SlowFastSystem& sys, double eps1, double r1) {
        py::gil_scoped_release nogil;
        return solve_connection(sys, eps1, r1);
    }, "sys"_a, "eps1"_a, "r1"_a);
    m.def("reconstruct_cycle", [](const SlowFastSystem& sys, const BranchPoint& bp, int n) {
        CycleOrbit c;
        {
            py::gil_scoped_release nogil;
            c = reconstruct_cycle(sys, bp, {}, n);
        }
        return py::make_tuple(points(c.samples), c.closure_gap);
    }, "sys"_a, "bp"_a, "n_samples"_a = 2000);
    m.def("singular_mu", [](const SlowFastSystem& sys, double h) { return singular_mu(sys, h); }, "sys"_a, "h"_a);
    m.def("hausdorff_to_singular", [](const SlowFastSystem& sys, const BranchPoint& bp, double mu) {
        py::gil_scoped_release nogil;
        return hausdorff_to_singular(sys, bp, mu);
    }, "sys"_a, "bp"_a, "mu"_a);

    m.def("branch_sweep", [](const SlowFastSystem& sys, double eps, double h_min, double h_max, int n, int jobs,
                             bool hausdorff) {
        SweepOptions so;
        so.jobs = jobs;
        so.hausdorff = hausdorff;
        CycleFamily fam;
        {
            py::gil_scoped_release nogil;
            fam = branch_sweep(sys, eps, h_min, h_max, n, {}, so);
        }
        std::ostringstream csv;
        write_family_csv(fam, csv);
        py::dict d;
        d["csv"] = csv.str();
        d["points"] = fam.points;
        d["mu_hopf"] = fam.mu_hopf;
        d["max_slope"] = fam.max_slope;
        d["seam"] = py::dict("h"_a = fam.seam.h, "h2"_a = fam.seam.h2, "mu_connection"_a = fam.seam.mu_connection,
                             "mu_small"_a = fam.seam.mu_small, "mismatch"_a = fam.seam.mismatch);
        return d;
    }, "sys"_a, "eps"_a = 1e-4, "h_min"_a = 0.05, "h_max"_a = 0.4, "n"_a = 20, "jobs"_a = 1, "hausdorff"_a = true);

    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "canard-lab");
        std::ostringstream out, err;
        int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, "args"_a);
}
