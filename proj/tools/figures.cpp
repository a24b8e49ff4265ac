#include <cmath>
#include <cstdio>
#include <iostream>

#include "cli.hpp"
#include "revpath/error.hpp"

namespace revpath::cli {

namespace {

// Parameter sets of the two worked examples.
struct Example {
    double x0, xT;
    double field_x_lo, field_x_hi;
    double alpha_lo, alpha_hi;
};

constexpr Example kMono{1.0, 2.0, 0.05, 3.0, -1.5, 1.5};
constexpr Example kBistable{1.0, 3.0, 0.05, 4.0, -1.5, 1.5};

cme::LatticeDomain figure_domain(const Params& p, double V, bool bistable) {
    if (!p.domain.empty()) {
        const auto [lo, hi] = parse_pair(p.domain, "--domain");
        return cme::LatticeDomain(lo, hi, V);
    }
    // Upper edges keep the leak through the boundary below 1e-6.
    const double hi = !bistable ? 4.0 : V < 100 ? 8.0 : 5.5;
    return cme::LatticeDomain::from_cells(0, static_cast<std::int64_t>(std::floor(hi * V)), V);
}

std::string vname(const char* fig, double V) { return std::string(fig) + "_V" + num(V) + ".csv"; }

// Hamiltonian vector field (xdot, alphadot) on a grid, plus the T(alpha0) scan.
void phase_portrait(Run& run, const char* fig, const crn::ReactionNetwork& net, const Example& ex) {
    auto* f = run.open(std::string(fig) + "_field.csv");
    put_header(f, {"x", "alpha", "H", "xdot", "alphadot"});
    const int nx = 60, na = 60;
    for (int i = 0; i <= nx; ++i) {
        const double x = ex.field_x_lo + (ex.field_x_hi - ex.field_x_lo) * i / nx;
        for (int j = 0; j <= na; ++j) {
            const Vec xv = Vec::Constant(1, x);
            const Vec av = Vec::Constant(1, ex.alpha_lo + (ex.alpha_hi - ex.alpha_lo) * j / na);
            put_row(f, {x, av[0], ldp::hamiltonian(net, xv, av), ldp::hamiltonian_grad_alpha(net, xv, av)[0],
                        -ldp::hamiltonian_grad_x(net, xv, av)[0]});
        }
    }
    run.close(f);

    auto* s = run.open(std::string(fig) + "_T_alpha.csv");
    put_header(s, {"alpha0", "T"});
    for (int k = 1; k <= 300; ++k) {
        const double a0 = 0.005 * k;
        put_row(s, {a0, ldp::hitting_time(net, ex.x0, a0, ex.xT, 20.0, 1e-3)});
    }
    run.close(s);
}

void write_nop(Run& run, const char* fig, const ldp::HamiltonianTrajectory& nop) {
    auto* f = run.open(std::string(fig) + "_nop.csv");
    write_hamiltonian(f, nop);
    run.close(f);
}

void npp_sweep(Run& run, const Params& p, const char* fig, const crn::ReactionNetwork& net, const Example& ex,
               const std::vector<double>& Vs, bool bistable) {
    const double T = 1.0;
    const auto nop = ldp::shoot_nop(net, ex.x0, ex.xT, T);
    write_nop(run, fig, nop);
    auto* peaks = run.open(std::string(fig) + "_peaks.csv");
    put_header(peaks, {"V", "t", "x_peak"});
    for (double V : Vs) {
        const auto dom = figure_domain(p, V, bistable);
        const auto pre = reversal::npp_compute(net, dom, ex.x0, ex.xT, T, p.Nt);
        auto* f = run.open(vname(fig, V));
        write_field(f, pre.cells, pre.dt, pre.slices, p.every, false);
        run.close(f);
        for (const auto& pk : reversal::peak_trajectory(pre)) put_row(peaks, {V, pk.t, pk.x});
        std::fprintf(stderr, "%s: V=%s done\n", fig, num(V).c_str());
    }
    run.close(peaks);
}

void spp_sweep(Run& run, const Params& p, const char* fig, const crn::ReactionNetwork& net, const Example& ex,
               const std::vector<double>& Vs) {
    const double T = 2.0;
    std::vector<double> grid(2001);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 1.0 + (ex.xT - 1.0) * static_cast<double>(k) / 2000;
    const auto quasi = ldp::quasipotential_1d(net, 1.0, grid);
    auto* o = run.open(std::string(fig) + "_op.csv");
    write_hamiltonian(o, ldp::op_path(net, quasi, ex.xT));
    run.close(o);
    auto* peaks = run.open(std::string(fig) + "_peaks.csv");
    put_header(peaks, {"V", "t", "x_peak"});
    for (double V : Vs) {
        const auto dom = figure_domain(p, V, false);
        const auto pre = reversal::spp_compute(net, dom, ex.xT, T, p.Nt);
        auto* f = run.open(vname(fig, V));
        write_field(f, pre.cells, pre.dt, pre.slices, p.every, false);
        run.close(f);
        for (const auto& pk : reversal::peak_trajectory(pre)) put_row(peaks, {V, pk.t, pk.x});
        std::fprintf(stderr, "%s: V=%s done\n", fig, num(V).c_str());
    }
    run.close(peaks);
}

} // namespace

void cmd_figure(Run& run, const Params& p) {
    const std::string& fig = p.figure;
    const bool bistable = fig == "fig4" || fig == "fig5";
    const auto net = load(run, p.net, bistable ? bistable_network : mono_network);
    if (net.num_species() != 1) throw InvalidArgument("figure presets need a single-species network");
    if (p.Nt == 0) throw InvalidArgument("--Nt must be positive");
    const Example& ex = bistable ? kBistable : kMono;

    std::vector<double> Vs = p.V;
    if (Vs.empty()) {
        if (fig == "fig2" || fig == "fig3") Vs = {10, 30, 150};
        if (fig == "fig5") Vs = {30, 150, 360};
    }
    for (double V : Vs)
        if (!(V > 0.0)) throw InvalidArgument("--V entries must be positive");

    auto& par = run.parameters();
    par = {{"figure", fig}, {"x0", ex.x0}, {"xT", ex.xT}};
    if (fig == "fig1" || fig == "fig4") {
        par["T"] = 1.0;
        phase_portrait(run, fig.c_str(), net, ex);
        write_nop(run, fig.c_str(), ldp::shoot_nop(net, ex.x0, ex.xT, 1.0));
        return;
    }
    par["V"] = Vs;
    par["Nt"] = p.Nt;
    par["every"] = p.every;
    par["domain"] = p.domain.empty() ? "preset" : p.domain;
    if (fig == "fig3") {
        par["T"] = 2.0;
        par.erase("x0");
        spp_sweep(run, p, "fig3", net, ex, Vs);
    } else {
        par["T"] = 1.0;
        npp_sweep(run, p, fig.c_str(), net, ex, Vs, bistable);
    }
}

} // namespace revpath::cli
