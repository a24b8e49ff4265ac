#include <cmath>
#include <vector>

#include "doctest.h"
#include "nets.hpp"
#include "revpath/error.hpp"
#include "revpath/gausslim.hpp"

using namespace revpath;

namespace {

ldp::Quasipotential1D mono_quasi() {
    std::vector<double> g;
    for (int k = 0; k <= 300; ++k) g.push_back(0.2 + 0.01 * k);
    return ldp::quasipotential_1d(testnet::mono(), 1.0, g);
}

} // namespace

TEST_CASE("stationary reversed fields") {
    const auto mono = testnet::mono();
    const auto q = mono_quasi();
    CHECK(gausslim::reversed_drift_stat(mono, q, 2.0) == doctest::Approx(-1.0));
    CHECK(std::abs(gausslim::reversed_drift_stat(mono, q, 1.0)) < 1e-14);
    for (double x : {0.5, 1.0, 1.7, 2.9}) {
        CHECK(gausslim::reversed_diffusion_stat(mono, q, x) == doctest::Approx(x + 1));
        CHECK(gausslim::reversed_drift_stat_derivative(mono, q, x) == doctest::Approx(-1.0));
    }
    const auto bi = testnet::bistable();
    std::vector<double> g;
    for (int k = 0; k <= 100; ++k) g.push_back(0.5 + 0.01 * k);
    const auto qb = ldp::quasipotential_1d(bi, 1.0, g);
    CHECK(gausslim::reversed_diffusion_stat(bi, qb, 1.0) == doctest::Approx(24.0));
    CHECK(gausslim::reversed_diffusion_stat(bi, qb, 1.3) > 0.0);
}

TEST_CASE("reversed OP follows the reversed drift") {
    const auto mono = testnet::mono();
    const auto q = mono_quasi();
    const auto op = ldp::op_path(mono, q, 2.0);
    // s = -t runs the OP backward from xT toward x_eq.
    double worst = 0.0, shape = 0.0;
    for (std::size_t k = 1; k + 1 < op.size(); k += 97) {
        const double s = -op.times[k];
        const double dxds = -(op.x[k + 1][0] - op.x[k - 1][0]) / (op.times[k + 1] - op.times[k - 1]);
        worst = std::max(worst, std::abs(dxds - gausslim::reversed_drift_stat(mono, q, op.x[k][0])));
        shape = std::max(shape, std::abs(op.x[k][0] - (1 + std::exp(-s))));
    }
    CHECK(worst <= 1e-6);
    CHECK(shape <= 1e-8);
}

TEST_CASE("gradient of S along a NOP") {
    const auto mono = testnet::mono();
    const auto nop = ldp::shoot_nop(mono, 1.0, 2.0, 1.0);
    const auto g = gausslim::grad_S_along_nop(nop, 0.0, 1.0);
    CHECK(std::isnan(g.d2S.front()));
    for (std::size_t k = 1; k < g.dS.size(); ++k) {
        CHECK(g.dS[k] > 0.0);
        CHECK(g.dS[k] > g.dS[k - 1]);
        CHECK(std::isfinite(g.d2S[k]));
    }
    CHECK_THROWS_AS(gausslim::grad_S_along_nop(ldp::hamilton_flow(mono, testnet::v1(1.0), testnet::v1(0.1), 1.0, 1e-3), 0, 1),
                    InvalidArgument);

    const auto slow = ldp::shoot_nop(mono, 1.0, 2.0, 8.0);
    std::size_t mid = 0;
    while (slow.x[mid][0] < 1.5) ++mid;
    const auto gs = gausslim::grad_S_along_nop(slow, slow.times[mid], slow.times[mid]);
    CHECK(std::abs(gs.dS[mid] - std::log(slow.x[mid][0])) <= 5e-3);
}

TEST_CASE("Lyapunov integrator") {
    const auto zero = gausslim::lyapunov_cov([](double) { return -1.0; }, [](double) { return 0.0; }, 0.0, 3.0, 1e-2);
    for (double k : zero.kappa) CHECK(k == 0.0);

    const auto c = gausslim::lyapunov_cov([](double) { return -1.0; }, [](double t) { return 2.0 + std::exp(-t); }, 0.0,
                                          5.0, 1e-4);
    double err = 0.0;
    for (std::size_t k = 0; k < c.times.size(); ++k) {
        const double t = c.times[k];
        err = std::max(err, std::abs(c.kappa[k] - (1 + std::exp(-t) - 2 * std::exp(-2 * t))));
        CHECK(c.kappa[k] >= 0.0);
    }
    CHECK(err <= 1e-8);
    CHECK(c.at(2.5) == doctest::Approx(1 + std::exp(-2.5) - 2 * std::exp(-5.0)).epsilon(1e-6));

    const auto spp = gausslim::spp_covariance(testnet::mono(), mono_quasi(), 2.0, 30.0, 1e-3);
    CHECK(spp.kappa.front() == 0.0);
    CHECK(spp.kappa.back() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Riccati equilibrium") {
    CHECK(gausslim::riccati_equilibrium(testnet::mono(), 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gausslim::riccati_equilibrium(testnet::bistable(), 1.0) == doctest::Approx(1.0 / 6).epsilon(1e-14));
    CHECK(gausslim::riccati_equilibrium(testnet::bistable(), 3.0) > 0.0);
    CHECK_THROWS_AS(gausslim::riccati_equilibrium(testnet::bistable(), 2.0), InvalidArgument);
}

TEST_CASE("NPP covariance is pinned at both ends") {
    const auto mono = testnet::mono();
    const auto nop = ldp::shoot_nop(mono, 1.0, 2.0, 1.0);
    const auto cov = gausslim::npp_covariance(mono, nop);
    CHECK(cov.times.front() == 0.0);
    CHECK(cov.times.back() == doctest::Approx(1.0));
    CHECK(cov.kappa.front() == 0.0);
    CHECK(cov.kappa.back() == 0.0);
    for (double k : cov.kappa) CHECK(k >= 0.0);
    CHECK(cov.at(0.5) > 0.0);
    CHECK(cov.at(1e-6) < 0.05);
}

TEST_CASE("slice fitting") {
    std::vector<double> cells;
    Vec q(202);
    for (int i = 0; i < 201; ++i) {
        cells.push_back(0.01 * i);
        q[i] = std::exp(-0.5 * std::pow(0.01 * i - 1.03, 2) / 0.01);
    }
    q[201] = 0.0;
    q /= q.sum();
    const auto fit = gausslim::fit_slice(cells, q);
    CHECK(fit.mean == doctest::Approx(1.03).epsilon(1e-9));
    CHECK(fit.variance == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(fit.cells_used > 5);

    Vec point = Vec::Zero(202);
    point[7] = 1.0;
    const auto pf = gausslim::fit_slice(cells, point);
    CHECK(pf.variance == 0.0);
    CHECK(pf.mean == doctest::Approx(0.07));

    Vec few = Vec::Zero(202);
    few[7] = 1.0;
    few[8] = 0.5;
    CHECK_THROWS_AS(gausslim::fit_slice(cells, few), InvalidArgument);
}

TEST_CASE("Gaussian envelope of prehistory slices") {
    const auto mono = testnet::mono();
    const double V = 150;
    const auto dom = cme::LatticeDomain::from_cells(0, 600, V);
    const auto nop = ldp::shoot_nop(mono, 1.0, 2.0, 1.0);
    const auto cov = gausslim::npp_covariance(mono, nop);
    const auto pre = reversal::npp_compute(mono, dom, 1.0, 2.0, 1.0, 1000);
    const auto env = gausslim::gaussian_envelope(pre, cov, [&](double t) { return nop.x_at(t)[0]; }, {0.5, 1.0});
    CHECK(env[0].fitted_var == doctest::Approx(env[0].predicted_var).epsilon(0.15));
    CHECK(env[0].tv_distance < 0.1);
    CHECK(env[1].fitted_var == 0.0);
    CHECK(env[1].predicted_var == 0.0);
    CHECK(env[1].tv_distance == doctest::Approx(0.0));

    const auto spp = reversal::spp_compute(mono, dom, 2.0, 6.0, 1000);
    const auto deep = gausslim::fit_slice(spp.cells, spp.slices.front());
    CHECK(deep.variance * V == doctest::Approx(1.0).epsilon(0.15));
}
