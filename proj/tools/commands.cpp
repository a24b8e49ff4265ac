#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "cli.hpp"
#include "revpath/error.hpp"
#include "revpath/gausslim.hpp"
#include "revpath/revsim.hpp"

namespace revpath::cli {

double step_or(const Params& p, double fallback) { return std::isnan(p.dt) ? fallback : p.dt; }

namespace {

std::string vtag(double V) { return "V" + num(V); }

double require(const std::optional<double>& v, const char* flag) {
    if (!v) throw InvalidArgument(std::string(flag) + " is required");
    return *v;
}

Vec initial_state(const crn::ReactionNetwork& net, const Params& p) {
    if (p.x0.empty()) throw InvalidArgument("--x0 is required");
    if (p.x0.size() != net.num_species())
        throw InvalidArgument("--x0 has " + std::to_string(p.x0.size()) + " entries, the network has " +
                              std::to_string(net.num_species()) + " species");
    return Eigen::Map<const Vec>(p.x0.data(), static_cast<Eigen::Index>(p.x0.size()));
}

double scalar_x0(const Params& p) {
    if (p.x0.size() != 1) throw InvalidArgument("--x0 must be a single value for this command");
    return p.x0.front();
}

std::vector<double> volumes(const Params& p) {
    if (p.V.empty()) throw InvalidArgument("--V is required");
    for (double V : p.V)
        if (!(V > 0.0)) throw InvalidArgument("--V entries must be positive");
    return p.V;
}

std::vector<double> uniform_grid(double T, double step) {
    if (!(step > 0.0)) throw InvalidArgument("--dt must be positive");
    const auto n = static_cast<std::size_t>(std::llround(T / step));
    std::vector<double> g(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g[k] = T * static_cast<double>(k) / static_cast<double>(n);
    return g;
}

void check_horizon(const Params& p) {
    if (!(p.T > 0.0)) throw InvalidArgument("--T must be positive");
    if (p.Nt == 0) throw InvalidArgument("--Nt must be positive");
}

void write_summary(std::FILE* f, const kinetics::EnsembleSummary& s) {
    const auto n = s.mean.empty() ? 0 : s.mean.front().size();
    std::vector<std::string> cols{"t"};
    for (Eigen::Index j = 0; j < n; ++j) cols.push_back("mean_" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < n; ++j) cols.push_back("var_" + std::to_string(j + 1));
    put_header(f, cols);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        std::vector<double> row{s.times[k]};
        for (Eigen::Index j = 0; j < n; ++j) row.push_back(s.mean[k][j]);
        for (Eigen::Index j = 0; j < n; ++j) row.push_back(s.variance[k][j]);
        put_row(f, row);
    }
}

void write_ensemble(Run& run, const std::string& stem, const std::vector<kinetics::Trajectory>& paths,
                    const std::vector<double>& grid) {
    if (paths.size() == 1) {
        auto* f = run.open(stem + ".csv");
        write_trajectory(f, paths.front());
        run.close(f);
        return;
    }
    auto* f = run.open(stem + "_summary.csv");
    write_summary(f, kinetics::summarize(paths, grid));
    run.close(f);
}

using Simulator = kinetics::Trajectory (*)(const crn::ReactionNetwork&, const Vec&, double, double, double,
                                           std::uint64_t, std::uint64_t);

kinetics::Trajectory ssa_adapter(const crn::ReactionNetwork& net, const Vec& x0, double V, double T, double,
                                 std::uint64_t seed, std::uint64_t stream) {
    kinetics::SsaOptions o;
    o.stream = stream;
    return kinetics::ssa_simulate(net, x0, V, T, seed, o);
}

void stochastic(Run& run, const Params& p, const char* name, Simulator sim) {
    const auto net = load(run, p.net);
    const Vec x0 = initial_state(net, p);
    const auto Vs = volumes(p);
    if (!(p.T > 0.0)) throw InvalidArgument("--T must be positive");
    if (p.runs == 0) throw InvalidArgument("--runs must be positive");
    const double dt = step_or(p, 1e-3);
    const auto grid = uniform_grid(p.T, dt);
    auto& par = run.parameters();
    par = {{"x0", p.x0}, {"V", Vs}, {"T", p.T}, {"dt", dt}, {"seed", p.seed}, {"runs", p.runs}};
    for (double V : Vs) {
        std::vector<kinetics::Trajectory> paths(p.runs);
        for (std::size_t k = 0; k < p.runs; ++k) paths[k] = sim(net, x0, V, p.T, dt, p.seed, k);
        const auto absorbed = std::count_if(paths.begin(), paths.end(), [](const auto& t) { return t.absorbed; });
        if (absorbed) std::cerr << name << ": " << absorbed << " path(s) left the non-negative orthant\n";
        write_ensemble(run, std::string(name) + "_" + vtag(V), paths, grid);
    }
}

ldp::Quasipotential1D quasi_between(const crn::ReactionNetwork& net, double x_eq, double a, double b) {
    const double lo = std::min({a, b, x_eq});
    const double hi = std::max({a, b, x_eq});
    const std::size_t n = 4000;
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k) grid[k] = lo + (hi - lo) * static_cast<double>(k) / n;
    return ldp::quasipotential_1d(net, x_eq, grid);
}

void write_peaks(std::FILE* f, double V, const reversal::PrehistoryField& pre) {
    for (const auto& pk : reversal::peak_trajectory(pre)) put_row(f, {V, pk.t, pk.x});
}

void warn_renormalized(const reversal::PrehistoryField& pre, double V) {
    const double worst = pre.renormalized.empty()
                             ? 0.0
                             : *std::max_element(pre.renormalized.begin(), pre.renormalized.end());
    if (worst > 0.0)
        std::cerr << "warning: V=" << num(V) << ": forward probability underflowed; up to " << worst
                  << " of a slice was renormalized away\n";
}

// Anchors of an NPP or SPP prehistory run, resolved once for all volumes.
struct Anchors {
    reversal::Mode mode;
    double x0 = 0.0; // NPP source
    double xT = 0.0;
    double x_eq = 0.0;
    double action = 0.0;
};

Anchors anchors(const crn::ReactionNetwork& net, const Params& p) {
    if (p.mode != "npp" && p.mode != "spp") throw InvalidArgument("--mode must be npp or spp");
    check_horizon(p);
    if (net.num_species() != 1) throw InvalidArgument("prehistory computations need a single-species network");
    Anchors a;
    a.xT = require(p.xT, "--xT");
    if (p.mode == "npp") {
        a.mode = reversal::Mode::npp;
        a.x0 = scalar_x0(p);
        a.x_eq = p.xeq ? *p.xeq : attractor(net, a.x0);
        a.action = ldp::shoot_nop(net, a.x0, a.xT, p.T).action.back();
    } else {
        a.mode = reversal::Mode::spp;
        if (!p.x0.empty()) throw InvalidArgument("--x0 cannot be combined with --mode spp");
        a.x_eq = p.xeq ? *p.xeq : attractor(net, a.xT);
        a.x0 = a.x_eq;
        a.action = quasi_between(net, a.x_eq, a.x_eq, a.xT).value_at(a.xT);
    }
    return a;
}

cme::LatticeDomain anchored_domain(const crn::ReactionNetwork& net, const Params& p, const Anchors& a, double V) {
    auto dom = resolve_domain(net, p, V, a.x0, a.xT, a.action, a.x_eq);
    const auto in = [&](double x) { return x >= dom.x(0) - 0.5 * dom.spacing() &&
                                           x <= dom.x(dom.interior() - 1) + 0.5 * dom.spacing(); };
    if (!in(a.xT) || !in(a.x0))
        throw InvalidArgument("the lattice domain does not contain the path endpoints");
    if (a.mode == reversal::Mode::spp && !in(a.x_eq))
        throw InvalidArgument("--mode spp needs a domain containing the equilibrium " + num(a.x_eq));
    return dom;
}

reversal::PrehistoryField prehistory(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom,
                                     const Anchors& a, const Params& p) {
    if (a.mode == reversal::Mode::npp) return reversal::npp_compute(net, dom, a.x0, a.xT, p.T, p.Nt);
    return reversal::spp_compute(net, dom, a.xT, p.T, p.Nt);
}

void anchor_parameters(Run& run, const Params& p, const Anchors& a, const std::vector<double>& Vs) {
    auto& par = run.parameters();
    par["mode"] = p.mode;
    par["V"] = Vs;
    par["T"] = p.T;
    par["Nt"] = p.Nt;
    if (a.mode == reversal::Mode::npp) par["x0"] = a.x0;
    par["xT"] = a.xT;
    par["x_eq"] = a.x_eq;
    par["domain"] = p.domain.empty() ? "auto" : p.domain;
}

} // namespace

void cmd_ode(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const Vec x0 = initial_state(net, p);
    if (!(p.T > 0.0)) throw InvalidArgument("--T must be positive");
    const double dt = step_or(p, 1e-3);
    run.parameters() = {{"x0", p.x0}, {"T", p.T}, {"dt", dt}};
    auto* f = run.open("ode.csv");
    write_trajectory(f, kinetics::ode_solve(net, x0, p.T, dt));
    run.close(f);
}

void cmd_ssa(Run& run, const Params& p) { stochastic(run, p, "ssa", ssa_adapter); }
void cmd_tauleap(Run& run, const Params& p) { stochastic(run, p, "tauleap", kinetics::tau_leap_simulate); }
void cmd_cle(Run& run, const Params& p) { stochastic(run, p, "cle", kinetics::cle_simulate); }

void cmd_nop(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const double x0 = scalar_x0(p);
    const double xT = require(p.xT, "--xT");
    if (!(p.T > 0.0)) throw InvalidArgument("--T must be positive");
    ldp::ShootingOptions o;
    o.dt = step_or(p, o.dt);
    const auto nop = ldp::shoot_nop(net, x0, xT, p.T, o);
    run.parameters() = {{"x0", x0}, {"xT", xT}, {"T", p.T}, {"dt", o.dt}, {"tol", o.tol}};
    auto* f = run.open("nop.csv");
    write_hamiltonian(f, nop);
    run.close(f);
    for (const auto& w : nop.warnings) std::cerr << "warning: " << w << '\n';
    std::printf("alpha0 = %.17g\naction = %.17g\n", nop.alpha0(), nop.action.back());
}

void cmd_op(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const double xT = require(p.xT, "--xT");
    const double x_eq = p.xeq ? *p.xeq : attractor(net, xT);
    ldp::OpOptions o;
    o.dt = step_or(p, o.dt);
    const auto quasi = quasi_between(net, x_eq, x_eq, xT);
    const auto op = ldp::op_path(net, quasi, xT, o);
    run.parameters() = {{"xT", xT}, {"x_eq", x_eq}, {"dt", o.dt}, {"tolerance", o.tolerance}};
    auto* f = run.open("op.csv");
    write_hamiltonian(f, op);
    run.close(f);
    std::printf("S(xT) = %.17g\n", quasi.value_at(xT));
}

void cmd_quasipotential(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const auto c1 = p.range.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : p.range.find(':', c1 + 1);
    if (c2 == std::string::npos) throw InvalidArgument("--range must look like LO:HI:STEP");
    double lo = 0, hi = 0, step = 0;
    try {
        lo = std::stod(p.range.substr(0, c1));
        hi = std::stod(p.range.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(p.range.substr(c2 + 1));
    } catch (const std::logic_error&) {
        throw InvalidArgument("--range must look like LO:HI:STEP");
    }
    if (!(step > 0.0) || !(hi > lo)) throw InvalidArgument("--range needs LO < HI and STEP > 0");
    const double x_eq = p.xeq ? *p.xeq : attractor(net, 0.5 * (lo + hi));
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k) grid[k] = lo + static_cast<double>(k) * step;
    const auto q = ldp::quasipotential_1d(net, x_eq, grid);
    run.parameters() = {{"x_eq", x_eq}, {"range", p.range}};
    auto* f = run.open("quasipotential.csv");
    put_header(f, {"x", "S", "dS"});
    for (std::size_t k = 0; k < q.grid.size(); ++k) put_row(f, {q.grid[k], q.S[k], q.dS[k]});
    run.close(f);
}

void cmd_stationary(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const auto Vs = volumes(p);
    if (net.num_species() != 1) throw InvalidArgument("stationary needs a single-species network");
    const double x_eq = require(p.xeq, "--xeq");
    run.parameters() = {{"V", Vs}, {"x_eq", x_eq}, {"domain", p.domain.empty() ? "auto" : p.domain}};
    for (double V : Vs) {
        // Auto domain: the law is below e^{-40} beyond its edges.
        const auto dom = resolve_domain(net, p, V, x_eq, x_eq, 40.0 / V, x_eq);
        const Vec pi = cme::stationary_distribution(net, dom);
        auto* f = run.open("stationary_" + vtag(V) + ".csv");
        put_header(f, {"x", "p"});
        for (std::size_t i = 0; i < dom.interior(); ++i) put_row(f, {dom.x(i), pi[static_cast<Eigen::Index>(i)]});
        run.close(f);
    }
}

void cmd_prehistory(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const auto Vs = volumes(p);
    const auto a = anchors(net, p);
    anchor_parameters(run, p, a, Vs);
    run.parameters()["every"] = p.every;
    auto* peaks = run.open(p.mode + "_peaks.csv");
    put_header(peaks, {"V", "t", "x_peak"});
    for (double V : Vs) {
        const auto dom = anchored_domain(net, p, a, V);
        const auto pre = prehistory(net, dom, a, p);
        warn_renormalized(pre, V);
        auto* f = run.open(p.mode + "_" + vtag(V) + ".csv");
        write_field(f, pre.cells, pre.dt, pre.slices, p.every, false);
        run.close(f);
        write_peaks(peaks, V, pre);
    }
    run.close(peaks);
}

void cmd_reversed_sim(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const auto Vs = volumes(p);
    const auto a = anchors(net, p);
    if (p.runs == 0) throw InvalidArgument("--runs must be positive");
    const double dt = step_or(p, p.T / 100);
    const auto grid = uniform_grid(p.T, dt);
    anchor_parameters(run, p, a, Vs);
    run.parameters()["seed"] = p.seed;
    run.parameters()["runs"] = p.runs;
    run.parameters()["dt"] = dt;
    for (double V : Vs) {
        const auto dom = anchored_domain(net, p, a, V);
        revsim::ReversedRateTable table;
        if (a.mode == reversal::Mode::spp) {
            table = revsim::build_spp_rates(net, dom, cme::stationary_distribution(net, dom));
        } else {
            const auto kernel = cme::build_kernel(net, dom, p.T / static_cast<double>(p.Nt));
            const auto field = cme::forward_evolve(
                kernel, dom, cme::point_mass(dom, reversal::nearest_lattice_point(a.x0, dom)), p.Nt);
            table = revsim::build_npp_rates(net, dom, field);
        }
        const auto paths = revsim::sample_ensemble(table, a.xT, p.T, p.seed, p.runs);
        write_ensemble(run, "reversed_" + p.mode + "_" + vtag(V), paths, grid);
    }
}

void cmd_covariance(Run& run, const Params& p) {
    const auto net = load(run, p.net);
    const auto a = anchors(net, p);
    anchor_parameters(run, p, a, p.V);
    gausslim::CovariancePath cov;
    std::function<double(double)> path;
    ldp::HamiltonianTrajectory nop, op;
    if (a.mode == reversal::Mode::npp) {
        nop = ldp::shoot_nop(net, a.x0, a.xT, p.T);
        cov = gausslim::npp_covariance(net, nop);
        path = [&nop](double t) { return nop.x_at(t)[0]; };
    } else {
        // Reversed-time covariance from xT, mapped back to forward time t = T - s.
        const double dt = step_or(p, 1e-3);
        run.parameters()["dt"] = dt;
        const auto quasi = quasi_between(net, a.x_eq, a.x_eq, a.xT);
        const auto rev = gausslim::spp_covariance(net, quasi, a.xT, p.T, dt);
        for (std::size_t k = rev.times.size(); k-- > 0;) {
            cov.times.push_back(p.T - rev.times[k]);
            cov.kappa.push_back(rev.kappa[k]);
        }
        cov.times.front() = 0.0;
        cov.provenance = rev.provenance;
        op = ldp::op_path(net, quasi, a.xT);
        const double t_stop = -op.times.front();
        path = [&op, t_stop, T = p.T](double t) { return op.x_at(std::max(t - T, -t_stop))[0]; };
    }
    auto* f = run.open("covariance_" + p.mode + ".csv");
    put_header(f, {"t", "kappa"});
    for (std::size_t k = 0; k < cov.times.size(); ++k) put_row(f, {cov.times[k], cov.kappa[k]});
    run.close(f);
    if (p.V.empty()) return;

    std::vector<double> times;
    for (int k = 1; k <= 9; ++k) times.push_back(p.T * k / 10.0);
    for (double V : volumes(p)) {
        const auto dom = anchored_domain(net, p, a, V);
        const auto pre = prehistory(net, dom, a, p);
        auto* e = run.open("envelope_" + p.mode + "_" + vtag(V) + ".csv");
        put_header(e, {"t", "fitted_var", "predicted_var", "tv_distance"});
        for (const auto& r : gausslim::gaussian_envelope(pre, cov, path, times))
            put_row(e, {r.t, r.fitted_var, r.predicted_var, r.tv_distance});
        run.close(e);
    }
}

} // namespace revpath::cli
