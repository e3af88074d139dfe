#include "canard_lab/cli.hpp"

#include "canard_lab/connection_branch.hpp"
#include "canard_lab/io.hpp"
#include "canard_lab/layer_dynamics.hpp"
#include "canard_lab/log.hpp"
#include "canard_lab/slow_manifold.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#ifndef CANARD_LAB_VERSION
#define CANARD_LAB_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace canard::cli {
namespace {

// JSON config files: top-level keys are global flags, nested objects belong to subcommands.
// "system" is read separately.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override
    {
        return collect(app, default_also).dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items, true);
        return items;
    }

    static json collect(const CLI::App* app, bool default_also)
    {
        json j = json::object();
        for (const CLI::Option* o : app->get_options()) {
            if (o->get_lnames().empty() || o->get_lnames().front() == "help" || o->get_lnames().front() == "config")
                continue;
            const auto& name = o->get_lnames().front();
            if (o->count() > 0) {
                auto res = o->results();
                if (o->get_type_size() == 0) {
                    j[name] = true;
                } else if (o->get_expected_max() > 1 || res.size() > 1) {
                    json arr = json::array();
                    for (const auto& r : res) arr.push_back(scalar(r));
                    j[name] = arr;
                } else if (!res.empty()) {
                    j[name] = scalar(res.front());
                }
            } else if (default_also && !o->get_default_str().empty()) {
                j[name] = scalar(o->get_default_str());
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            if (sub->parsed()) j[sub->get_name()] = collect(sub, default_also);
        }
        return j;
    }

private:
    static json scalar(const std::string& s)
    {
        if (s == "true") return true;
        if (s == "false") return false;
        char* end = nullptr;
        long long n = std::strtoll(s.c_str(), &end, 10);
        if (end && *end == '\0' && end != s.c_str()) return n;
        double v = std::strtod(s.c_str(), &end);
        if (end && *end == '\0' && end != s.c_str()) return v;
        return s;
    }

    static void flatten(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out, bool top)
    {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (top && it.key() == "system") continue;
            if (it->is_object()) {
                auto p = parents;
                p.push_back(it.key());
                flatten(*it, p, out, false);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (it->is_array()) {
                for (const auto& v : *it) item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            } else if (it->is_string()) {
                item.inputs = {it->get<std::string>()};
            } else if (it->is_boolean() || it->is_number()) {
                item.inputs = {it->dump()};
            } else {
                throw CLI::ConversionError("unsupported config value for " + it.key());
            }
            out.push_back(std::move(item));
        }
    }
};

struct Common {
    std::string config;
    std::string out = ".";
    int jobs = 1;
    std::uint64_t seed = 0;
    bool plot_data = false;
    Tolerances tol{};
    double tol_fp = 1e-14;
};

// long-format rows: series, index, variable, value
class PlotData {
public:
    explicit PlotData(std::ostream& os) : os_(os) { os_ << "series,index,variable,value\n"; }
    void add(const std::string& series, std::size_t index, const std::string& variable, double value)
    {
        os_ << series << ',' << index << ',' << variable << ',' << io::fmt(value) << '\n';
    }

private:
    std::ostream& os_;
};

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
    std::ofstream open(const std::string& name)
    {
        fs::create_directories(dir_);
        std::ofstream f(dir_ / name);
        if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
        f.precision(17);
        written_.push_back(name);
        return f;
    }
    void write_json(const std::string& name, const json& j)
    {
        auto f = open(name);
        f << j.dump(2) << '\n';
    }
    const std::vector<std::string>& written() const { return written_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> written_;
};

std::string series_name(const std::string& key, double v)
{
    std::ostringstream s;
    s << key << '=' << v;
    return s.str();
}

void require(bool ok, const std::string& msg)
{
    if (!ok) throw ConfigError(msg);
}

// ---------------------------------------------------------------- subcommands

struct LayerArgs {
    std::vector<double> h{0.1, 0.5, 1.0, 2.0};
};

json run_layer(const LayerArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    for (double h : a.h) require(h > 0, "layer: h must be positive");
    std::vector<LayerOrbit> orbits(a.h.size());
    parallel_for(int(a.h.size()), c.jobs, [&](int i) { orbits[i] = periodic_orbit(a.h[i], c.tol); });

    auto f = out.open("layer.csv");
    io::CsvWriter csv(f, {"h", "period", "H0", "H_drift"});
    json summary = json::array();
    for (const auto& o : orbits) {
        double H0 = first_integral(-o.h, 0.0);
        csv.row({o.h, o.period, H0, o.H_drift});
        summary.push_back({{"h", o.h}, {"period", o.period}, {"H_drift", o.H_drift}});
        log << "h = " << o.h << "  period = " << io::fmt(o.period) << "  |H drift| = " << o.H_drift << '\n';
    }
    if (c.plot_data) {
        auto p = out.open("layer_plot.csv");
        PlotData pd(p);
        for (const auto& o : orbits) {
            auto name = series_name("h", o.h);
            const auto& ts = o.samples.times();
            const auto& xs = o.samples.states();
            for (std::size_t i = 0; i < ts.size(); ++i) {
                pd.add(name, i, "t", ts[i]);
                pd.add(name, i, "x2", xs[i][0]);
                pd.add(name, i, "z2", xs[i][1]);
                pd.add(name, i, "H", first_integral(xs[i][0], xs[i][1]));
            }
        }
    }
    return summary;
}

struct ManifoldArgs {
    double r2 = 0.05, mu2 = 0.0, nu = 0.2;
    int order = 30;
    int random_points = 0;
};

json run_slow_manifold(const SlowFastSystem& sys, const ManifoldArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    require(a.r2 > 0, "slow-manifold: r2 must be positive");
    require(a.nu > 0, "slow-manifold: nu must be positive");
    require(a.order >= 2, "slow-manifold: order must be at least 2");
    require(a.random_points >= 0, "slow-manifold: random-points must be non-negative");
    ManifoldConfig cfg;
    cfg.nu = a.nu;
    cfg.N = a.order;
    cfg.fp_tol = c.tol_fp;
    auto res = solve_invariant_series(sys, a.r2, a.mu2, cfg);

    json j = manifold_to_json(res);
    j["residual"] = res.residual;
    if (a.random_points > 0) {
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> pick(-a.nu, a.nu);
        std::vector<double> v(a.random_points);
        for (auto& x : v) x = pick(rng);
        j["random_points"] = v;
        j["random_residual"] = invariance_residual(res, v);
    }
    out.write_json("slow_manifold.json", j);
    log << "iterations = " << res.iterations << "  residual = " << res.residual << '\n';

    if (c.plot_data) {
        auto p = out.open("slow_manifold_plot.csv");
        PlotData pd(p);
        auto grid = default_grid(a.nu, 81);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double y2 = grid[i] - res.offset;
            try {
                auto m = eval_manifold(res, y2);
                pd.add("manifold", i, "y2", y2);
                pd.add("manifold", i, "x2", m[0]);
                pd.add("manifold", i, "z2", m[1]);
            } catch (const std::domain_error&) {
            }
        }
    }
    return {{"iterations", res.iterations}, {"residual", res.residual}};
}

struct HopfArgs {
    std::vector<double> r2{0.01, 0.02, 0.05, 0.1};
};

json run_hopf(const SlowFastSystem& sys, const HopfArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    for (double r : a.r2) require(r > 0, "hopf: r2 must be positive");
    MelnikovOptions mo;
    mo.tol = c.tol;
    mo.manifold.fp_tol = c.tol_fp;
    std::vector<double> mu(a.r2.size()), mu_eig(a.r2.size());
    parallel_for(int(a.r2.size()), c.jobs, [&](int i) {
        mu[i] = hopf_mu(sys, a.r2[i], mo);
        mu_eig[i] = hopf_by_eigenvalues(sys, a.r2[i], mu[i]).mu;
    });
    auto f = out.open("hopf.csv");
    io::CsvWriter csv(f, {"r2", "mu_H", "mu2_H", "mu_eigen", "difference"});
    json summary = json::array();
    for (std::size_t i = 0; i < mu.size(); ++i) {
        csv.row({a.r2[i], mu[i], mu[i] / a.r2[i], mu_eig[i], std::abs(mu[i] - mu_eig[i])});
        summary.push_back({{"r2", a.r2[i]}, {"mu_H", mu[i]}, {"mu_eigen", mu_eig[i]}});
        log << "r2 = " << a.r2[i] << "  mu_H = " << io::fmt(mu[i]) << "  eigen = " << io::fmt(mu_eig[i]) << '\n';
    }
    return summary;
}

struct SmallArgs {
    double r2 = 0.01;
    double h_min = 0.0, h_max = 2.0;
    int n = 9;
};

json run_small_branch(const SlowFastSystem& sys, const SmallArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    require(a.r2 > 0, "small-branch: r2 must be positive");
    require(a.h_min >= 0 && a.h_max > a.h_min, "small-branch: need 0 <= h-min < h-max");
    require(a.n >= 2, "small-branch: need at least two points");
    MelnikovOptions mo;
    mo.tol = c.tol;
    mo.manifold.fp_tol = c.tol_fp;
    std::vector<SmallBranchPoint> pts(a.n);
    parallel_for(a.n, c.jobs, [&](int i) {
        double h = a.h_min + (a.h_max - a.h_min) * i / (a.n - 1);
        pts[i] = solve_small_branch(sys, h, a.r2, mo);
    });
    auto f = out.open("small_branch.csv");
    write_branch_csv(pts, f);
    double worst = 0;
    for (const auto& p : pts) worst = std::max(worst, p.residual);
    log << a.n << " points, max residual " << worst << '\n';
    if (c.plot_data) {
        auto p = out.open("small_branch_plot.csv");
        PlotData pd(p);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            pd.add("small_branch", i, "h", pts[i].h);
            pd.add("small_branch", i, "y2_bar", pts[i].y2_bar);
            pd.add("small_branch", i, "mu2_bar", pts[i].mu2_bar);
        }
    }
    return {{"points", a.n}, {"max_residual", worst}};
}

struct ShilnikovArgs {
    double mu = 0.05, r10 = 0.05, y11 = 0.01, tau = 10.0, eps11 = 0.25;
    std::string side = "attracting";
    int degree = 10;
};

json run_shilnikov(const SlowFastSystem& sys, const ShilnikovArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    require(a.tau > 0, "shilnikov: tau must be positive");
    require(a.eps11 > 0, "shilnikov: eps11 must be positive");
    require(a.r10 >= 0, "shilnikov: r10 must be non-negative");
    require(a.side == "attracting" || a.side == "repelling", "shilnikov: side is attracting or repelling");
    auto nf = normal_form(sys, a.side == "attracting" ? Side::attracting : Side::repelling, a.mu, a.degree);
    ShilnikovBC bc;
    bc.tau = a.tau;
    bc.eps11 = a.eps11;
    bc.r10 = a.r10;
    bc.y11 = a.y11;
    bc.mu = a.mu;
    bc.lambda = nf.lambda;
    ShilnikovOptions so;
    so.tol = c.tol_fp;
    auto sol = shilnikov_solve(nf.L0, nf.L1, bc, so);
    json j = shilnikov_to_json(sol);
    j["side"] = a.side;
    j["phi_infinity"] = phi_infinity(nf.L0, a.tau, a.eps11, a.r10, a.y11, a.mu);
    out.write_json("shilnikov.json", j);
    log << "iterations = " << sol.iterations << "  contraction ratio = " << sol.contraction_ratio() << '\n';
    if (c.plot_data) {
        auto p = out.open("shilnikov_plot.csv");
        PlotData pd(p);
        for (std::size_t i = 0; i < sol.t.size(); ++i) {
            pd.add("shilnikov", i, "t", sol.t[i]);
            pd.add("shilnikov", i, "u", sol.u_nodes[i]);
            pd.add("shilnikov", i, "phi", sol.phi(sol.t[i]));
        }
    }
    return {{"iterations", sol.iterations}, {"contraction_ratio", sol.contraction_ratio()}};
}

struct BranchArgs {
    double eps = 1e-4, h_min = 0.05, h_max = 0.4;
    int n = 20;
    int small_points = 6;
    bool no_hausdorff = false;
    double seam_tol = 1e-4;
};

ConnectionOptions connection_options(const Common& c)
{
    ConnectionOptions o;
    o.tol = c.tol;
    o.melnikov.tol = c.tol;
    o.melnikov.manifold.fp_tol = c.tol_fp;
    return o;
}

void orbit_plot(PlotData& pd, const std::string& name, const std::vector<Point3>& pts)
{
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pd.add(name, i, "x", pts[i][0]);
        pd.add(name, i, "y", pts[i][1]);
        pd.add(name, i, "z", pts[i][2]);
    }
}

json run_branch(const SlowFastSystem& sys, const BranchArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    require(a.seam_tol > 0, "branch: seam-tol must be positive");
    require(a.small_points >= 1, "branch: small-points must be positive");
    SweepOptions so;
    so.jobs = c.jobs;
    so.small_points = a.small_points;
    so.hausdorff = !a.no_hausdorff;
    so.seam_tol = a.seam_tol;
    auto fam = branch_sweep(sys, a.eps, a.h_min, a.h_max, a.n, connection_options(c), so);

    {
        auto f = out.open("branch.csv");
        write_family_csv(fam, f);
    }
    json seam = {{"h", fam.seam.h},
                 {"h2", fam.seam.h2},
                 {"mu_connection", fam.seam.mu_connection},
                 {"mu_small", fam.seam.mu_small},
                 {"mismatch", fam.seam.mismatch},
                 {"tolerance", a.seam_tol},
                 {"mu_hopf", fam.mu_hopf},
                 {"max_slope", fam.max_slope}};
    out.write_json("seam.json", seam);
    out.write_json("branch.json", family_to_json(fam));
    double worst = 0;
    for (const auto& p : fam.points) worst = std::max(worst, p.residual);
    log << fam.points.size() << " points, max residual " << worst << ", seam mismatch " << fam.seam.mismatch
        << ", max |dmu/dh| " << fam.max_slope << '\n';
    if (c.plot_data) {
        auto p = out.open("branch_plot.csv");
        PlotData pd(p);
        for (std::size_t i = 0; i < fam.orbits.size(); ++i) orbit_plot(pd, series_name("h", fam.points[i].h), fam.orbits[i].samples);
    }
    return {{"points", fam.points.size()}, {"max_residual", worst}, {"seam", seam}};
}

struct OrbitArgs {
    double eps = 1e-4, h = 0.3;
};

json run_orbit(const SlowFastSystem& sys, const OrbitArgs& a, const Common& c, Outputs& out, std::ostream& log)
{
    require(a.eps > 0 && a.h > 0, "orbit: eps and h must be positive");
    auto opt = connection_options(c);
    double eps1 = a.eps / (a.h * a.h);
    require(eps1 <= opt.eps11, "orbit: eps / h^2 must not exceed eps11 (use small-branch below the seam)");
    auto bp = solve_connection(sys, eps1, a.h, opt);
    auto cyc = reconstruct_cycle(sys, bp, opt);
    auto rc = reclose_ambient(sys, bp, opt);
    double ms = singular_mu(sys, a.h, opt.tol);
    auto sing = singular_cycle(sys, a.h, ms, opt.tol);
    double dh = hausdorff_distance(cyc.samples, sing.samples);

    {
        auto f = out.open("orbit.csv");
        io::CsvWriter csv(f, {"x", "y", "z"});
        for (const auto& p : cyc.samples) csv.row({p[0], p[1], p[2]});
    }
    json j = {{"h", bp.h},         {"eps", bp.eps},         {"eps1", bp.eps1},
              {"mu_bar", bp.mu_star}, {"y1_star", bp.y1_star}, {"residual", bp.residual},
              {"det_scaled", bp.det_scaled}, {"closure_gap", cyc.closure_gap},
              {"reclosure_gap", rc.gap}, {"reclosure_chart_gap", rc.chart_gap},
              {"singular_mu", ms},     {"hausdorff", dh}};
    out.write_json("orbit.json", j);
    log << "mu_bar = " << io::fmt(bp.mu_star) << "  residual = " << bp.residual << "  d_H = " << dh << '\n';
    if (c.plot_data) {
        auto p = out.open("orbit_plot.csv");
        PlotData pd(p);
        orbit_plot(pd, "cycle", cyc.samples);
        orbit_plot(pd, "singular", sing.samples);
    }
    return j;
}

json versions()
{
    return {{"canard_lab", CANARD_LAB_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"cli11", CLI11_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"cplusplus", __cplusplus},
#if defined(__clang__)
            {"compiler", "clang " __clang_version__}
#elif defined(__GNUC__)
            {"compiler", "gcc " __VERSION__}
#else
            {"compiler", "unknown"}
#endif
    };
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Canard cycle construction near a folded saddle-node of type II"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.name("canard-lab");
    app.require_subcommand(1);
    app.fallthrough();   // global flags may follow the subcommand
    app.allow_config_extras(CLI::config_extras_mode::error);
    // --h is an orbit amplitude, so help is long-form only
    app.set_help_flag("--help", "Print this help message and exit");

    Common c;
    app.set_config("--config", "", "JSON run configuration");
    app.add_option("--out", c.out, "Output directory")->capture_default_str();
    app.add_option("--jobs", c.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--seed", c.seed, "Seed for randomised grids")->capture_default_str();
    app.add_flag("--plot-data", c.plot_data, "Also write long-format plot data");
    app.add_option("--tol-abs", c.tol.abs_tol, "Integrator absolute tolerance")->capture_default_str();
    app.add_option("--tol-rel", c.tol.rel_tol, "Integrator relative tolerance")->capture_default_str();
    app.add_option("--tol-newton", c.tol.newton_tol, "Newton residual tolerance")->capture_default_str();
    app.add_option("--tol-event", c.tol.event_tol, "Event location tolerance")->capture_default_str();
    app.add_option("--tol-fp", c.tol_fp, "Fixed-point iteration tolerance")->capture_default_str();

    LayerArgs la;
    auto* layer = app.add_subcommand("layer", "Layer periodic orbits, periods and first-integral drift");
    layer->add_option("--h", la.h, "Orbit amplitudes")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->capture_default_str();

    ManifoldArgs ma;
    auto* manifold = app.add_subcommand("slow-manifold", "Chart-2 slow manifold power series");
    manifold->add_option("--r2", ma.r2)->capture_default_str();
    manifold->add_option("--mu2", ma.mu2)->capture_default_str();
    manifold->add_option("--nu", ma.nu, "Series radius")->capture_default_str();
    manifold->add_option("--order", ma.order, "Series order")->capture_default_str();
    manifold->add_option("--random-points", ma.random_points, "Extra residual points drawn with --seed")->capture_default_str();

    HopfArgs ha;
    auto* hopf = app.add_subcommand("hopf", "Hopf parameter table over r2");
    hopf->add_option("--r2", ha.r2)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->capture_default_str();

    SmallArgs sa;
    auto* small = app.add_subcommand("small-branch", "Small cycles in chart 2");
    small->add_option("--r2", sa.r2)->capture_default_str();
    small->add_option("--h-min", sa.h_min)->capture_default_str();
    small->add_option("--h-max", sa.h_max)->capture_default_str();
    small->add_option("--n", sa.n)->capture_default_str();

    ShilnikovArgs sh;
    auto* shil = app.add_subcommand("shilnikov", "Shilnikov boundary value problem diagnostics");
    shil->add_option("--mu", sh.mu)->capture_default_str();
    shil->add_option("--r10", sh.r10)->capture_default_str();
    shil->add_option("--y11", sh.y11)->capture_default_str();
    shil->add_option("--tau", sh.tau)->capture_default_str();
    shil->add_option("--eps11", sh.eps11)->capture_default_str();
    shil->add_option("--side", sh.side)->capture_default_str();
    shil->add_option("--degree", sh.degree, "Normal form degree")->capture_default_str();

    BranchArgs ba;
    auto* branch = app.add_subcommand("branch", "Full canard cycle family at fixed eps");
    branch->add_option("--eps", ba.eps)->capture_default_str();
    branch->add_option("--h-min", ba.h_min)->capture_default_str();
    branch->add_option("--h-max", ba.h_max)->capture_default_str();
    branch->add_option("--n", ba.n)->capture_default_str();
    branch->add_option("--small-points", ba.small_points)->capture_default_str();
    branch->add_option("--seam-tol", ba.seam_tol)->capture_default_str();
    branch->add_flag("--no-hausdorff", ba.no_hausdorff, "Skip the distance to the singular cycle");

    OrbitArgs oa;
    auto* orbit = app.add_subcommand("orbit", "Single cycle reconstruction and Hausdorff distance");
    orbit->add_option("--eps", oa.eps)->capture_default_str();
    orbit->add_option("--h", oa.h)->capture_default_str();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    if (!argv_rev.empty()) argv_rev.pop_back();   // program name
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    CLI::App* cmd = app.get_subcommands().front();
    if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) c.config = cfg->as<std::string>();
    Outputs outputs(c.out);
    json manifest;
    manifest["command"] = cmd->get_name();
    manifest["args"] = args;
    manifest["config"] = JsonConfig::collect(&app, true);
    manifest["versions"] = versions();
    auto t0 = std::chrono::steady_clock::now();
    int code = 0;

    try {
        c.tol.validate();
        require(c.tol_fp > 0, "tolerances must be strictly positive");
        SlowFastSystem sys = SlowFastSystem::canonical();
        if (!c.config.empty()) {
            std::ifstream f(c.config);
            json j = json::parse(f);
            if (j.contains("system")) sys = system_from_json(j.at("system"));
        }
        manifest["system"] = system_to_json(sys);

        json summary;
        const auto& name = cmd->get_name();
        if (name == "layer") summary = run_layer(la, c, outputs, out);
        else if (name == "slow-manifold") summary = run_slow_manifold(sys, ma, c, outputs, out);
        else if (name == "hopf") summary = run_hopf(sys, ha, c, outputs, out);
        else if (name == "small-branch") summary = run_small_branch(sys, sa, c, outputs, out);
        else if (name == "shilnikov") summary = run_shilnikov(sys, sh, c, outputs, out);
        else if (name == "branch") summary = run_branch(sys, ba, c, outputs, out);
        else summary = run_orbit(sys, oa, c, outputs, out);
        manifest["status"] = "ok";
        manifest["summary"] = summary;
    } catch (const ConfigError& e) {
        code = 1;
        manifest["status"] = "config_error";
        manifest["error"] = e.what();
        err << "error: " << e.what() << '\n';
    } catch (const json::exception& e) {
        code = 1;
        manifest["status"] = "config_error";
        manifest["error"] = e.what();
        err << "error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        // SolverError, or an iterate that left the domain of a construction
        code = 2;
        manifest["status"] = "solver_failure";
        manifest["error"] = e.what();
        err << "solver failure: " << e.what() << '\n';
        try {
            outputs.write_json("diagnostic.json", {{"command", cmd->get_name()},
                                                   {"error", e.what()},
                                                   {"kind", dynamic_cast<const SolverError*>(&e) ? "solver" : "domain"},
                                                   {"warnings", log::warning_count()}});
        } catch (const std::exception&) {
        }
    }

    manifest["exit_code"] = code;
    manifest["warnings"] = log::warning_count();
    manifest["timings"] = {
        {"total_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    manifest["outputs"] = outputs.written();
    try {
        fs::create_directories(outputs.dir());
        std::ofstream f(outputs.dir() / "manifest.json");
        f << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
        err << "cannot write manifest: " << e.what() << '\n';
        if (code == 0) code = 1;
    }
    return code;
}

int run(int argc, const char* const* argv)
{
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace canard::cli
