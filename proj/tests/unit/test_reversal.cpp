#include <cmath>
#include <vector>

#include "doctest.h"
#include "nets.hpp"
#include "revpath/cme.hpp"
#include "revpath/error.hpp"
#include "revpath/ldp.hpp"
#include "revpath/reversal.hpp"

using namespace revpath;

namespace {

cme::TransitionKernel dense_kernel(RowMat P, double dt, double V) {
    cme::TransitionKernel k;
    const auto nx = static_cast<std::size_t>(P.rows()) - 1;
    k.P = std::move(P);
    k.dt = dt;
    k.volume = V;
    k.band_lo.assign(nx, 0);
    k.band_hi.assign(nx, nx - 1);
    return k;
}

// P = I + dt Q for the mono birth-death generator with reflecting edges.
cme::TransitionKernel reversible_kernel(const cme::LatticeDomain& dom, double dt) {
    const crn::ScalarChain chain(testnet::mono());
    const auto n = static_cast<Eigen::Index>(dom.size());
    const auto nx = n - 1;
    RowMat P = RowMat::Zero(n, n);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const auto pop = dom.population(static_cast<std::size_t>(i));
        const double up = i + 1 < nx ? chain.up_propensity(pop, dom.volume()) : 0.0;
        const double down = i > 0 ? chain.down_propensity(pop, dom.volume()) : 0.0;
        if (i + 1 < nx) P(i, i + 1) = up * dt;
        if (i > 0) P(i, i - 1) = down * dt;
        P(i, i) = 1.0 - (up + down) * dt;
    }
    P(nx, nx) = 1.0;
    return dense_kernel(std::move(P), dt, dom.volume());
}

double tv(const Vec& a, const Vec& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

} // namespace

TEST_CASE("nearest lattice point") {
    const auto dom = cme::LatticeDomain::from_cells(0, 40, 10.0);
    CHECK(reversal::nearest_lattice_point(1.0, dom) == 10);
    CHECK(reversal::nearest_lattice_point(1.05, dom) == 10);
    CHECK(reversal::nearest_lattice_point(1.0500001, dom) == 11);
    CHECK(dom.x(reversal::nearest_lattice_point(2.04, dom)) == doctest::Approx(2.0));
    CHECK_THROWS_AS(reversal::nearest_lattice_point(5.0, dom), InvalidArgument);
    CHECK_THROWS_AS(reversal::nearest_lattice_point(-0.6, dom), InvalidArgument);
}

TEST_CASE("reversible chains reverse to themselves") {
    const double V = 10;
    const auto dom = cme::LatticeDomain::from_cells(0, 40, V);
    const auto k = reversible_kernel(dom, 1e-3);
    const Vec pi = testnet::poisson_law(V, 0, 40);
    CHECK((k.apply_left(pi) - pi).cwiseAbs().maxCoeff() <= 1e-15);
    const auto r = reversal::reverse_stationary(pi, pi, k);
    const auto nx = static_cast<Eigen::Index>(dom.interior());
    CHECK((r.at(0).topLeftCorner(nx, nx) - k.P.topLeftCorner(nx, nx)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(r.at(0).row(nx).isZero());
}

TEST_CASE("time-indexed reversal") {
    const auto mono = testnet::mono();
    const auto dom = cme::LatticeDomain::from_cells(0, 30, 10.0);
    const auto k = cme::build_kernel(mono, dom, 0.02);
    const auto i0 = reversal::nearest_lattice_point(1.0, dom);
    const auto f = cme::forward_evolve(k, dom, cme::point_mass(dom, i0), 20);
    const auto r = reversal::reverse_kernel(f, k);
    REQUIRE(r.steps() == 20);
    for (std::size_t m = 0; m < r.steps(); ++m) {
        const RowMat& t = r.at(m);
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            if (f.slices[m + 1][i] > 0.0)
                CHECK(std::abs(t.row(i).sum() - 1.0) <= 1e-10);
            else
                CHECK(t.row(i).isZero());
        }
    }
    // A point-mass prior sends every reachable row back to x0.
    for (Eigen::Index i = 0; i < r.at(0).rows(); ++i)
        if (f.slices[1][i] > 0.0) CHECK(r.at(0)(i, static_cast<Eigen::Index>(i0)) == doctest::Approx(1.0));
}

TEST_CASE("double reversal recovers the forward kernel") {
    const auto mono = testnet::mono();
    const auto dom = cme::LatticeDomain::from_cells(0, 30, 10.0);
    const auto k = cme::build_kernel(mono, dom, 0.02);
    const Vec init = testnet::poisson_law(10.0, 5, 35);
    const auto f = cme::forward_evolve(k, dom, init, 50);
    const auto r = reversal::reverse_kernel(f, k);
    double worst = 0.0;
    for (std::size_t m = 0; m < r.steps(); ++m) {
        const auto back = dense_kernel(r.at(m), k.dt, k.volume);
        const auto rr = reversal::reverse_stationary(f.slices[m + 1], f.slices[m], back);
        for (Eigen::Index j = 0; j < k.P.rows(); ++j) {
            if (!(f.slices[m][j] > 0.0)) continue;
            for (Eigen::Index i = 0; i < k.P.cols(); ++i)
                if (f.slices[m + 1][i] > 0.0) worst = std::max(worst, std::abs(rr.at(0)(j, i) - k.P(j, i)));
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("NPP endpoints and normalization") {
    const auto mono = testnet::mono();
    const auto dom = cme::LatticeDomain::from_cells(0, 60, 15.0);
    const auto f = reversal::npp_compute(mono, dom, 1.0, 2.0, 1.0, 200);
    const auto src = reversal::nearest_lattice_point(1.0, dom);
    const auto dst = reversal::nearest_lattice_point(2.0, dom);
    CHECK(f.target_cell == dst);
    CHECK(f.slices.back() == cme::point_mass(dom, dst));
    CHECK(tv(f.slices.front(), cme::point_mass(dom, src)) <= 1e-9);
    for (const auto& s : f.slices) CHECK(std::abs(s.sum() - 1.0) <= 1e-9);
    CHECK(f.peak.front() == src);
    CHECK(f.peak.back() == dst);
    for (double r : f.renormalized) CHECK(r == 0.0);
}

TEST_CASE("NPP fields mix into the prehistory of a spread initial law") {
    const auto mono = testnet::mono();
    const double V = 10;
    const auto dom = cme::LatticeDomain::from_cells(0, 35, V);
    const auto k = cme::build_kernel(mono, dom, 0.02);
    const std::size_t Nt = 50;
    const auto dst = reversal::nearest_lattice_point(1.8, dom);
    const Vec init = testnet::poisson_law(V, 0, 35);
    const auto mixed_field = cme::forward_evolve(k, dom, init, Nt);
    const auto mixed = reversal::npp_from_field(mixed_field, k, 0, dst);

    std::vector<Vec> combo(Nt + 1, Vec::Zero(static_cast<Eigen::Index>(dom.size())));
    for (std::size_t x0 = 0; x0 < dom.interior(); ++x0) {
        const double w = mixed.slices[0][static_cast<Eigen::Index>(x0)];
        if (w <= 0.0) continue;
        const auto f = cme::forward_evolve(k, dom, cme::point_mass(dom, x0), Nt);
        const auto q = reversal::npp_from_field(f, k, x0, dst);
        for (std::size_t m = 0; m <= Nt; ++m) combo[m] += w * q.slices[m];
    }
    double worst = 0.0;
    for (std::size_t m = 0; m <= Nt; ++m) worst = std::max(worst, tv(combo[m], mixed.slices[m]));
    CHECK(worst <= 1e-8);
}

TEST_CASE("SPP") {
    const auto mono = testnet::mono();
    const double V = 30;
    const auto dom = cme::LatticeDomain::from_cells(0, 120, V);
    const auto f = reversal::spp_compute(mono, dom, 2.0, 2.0, 400);
    CHECK(f.mode == reversal::Mode::spp);
    CHECK(f.slices.back() == cme::point_mass(dom, reversal::nearest_lattice_point(2.0, dom)));
    for (const auto& s : f.slices) CHECK(std::abs(s.sum() - 1.0) <= 1e-9);

    const auto deep = reversal::spp_compute(mono, cme::LatticeDomain::from_cells(0, 600, 150.0), 2.0, 6.0, 1000);
    CHECK(std::abs(deep.mean(0) - 1.0) <= 0.05);
}

TEST_CASE("peak trajectory") {
    reversal::PrehistoryField f;
    f.cells = {0.1, 0.2, 0.3, 0.4};
    f.dt = 0.5;
    Vec a(5), b(5), c(5);
    a << 0, 0.5, 0, 0.5, 0; // tie: stays next to the later peak
    b << 0, 0, 0, 1, 0;
    c << 0, 0, 1, 0, 0;
    f.slices = {a, b, c};
    const auto p = reversal::peak_trajectory(f);
    REQUIRE(p.size() == 3);
    CHECK(p[2].cell == 2);
    CHECK(p[1].cell == 3);
    CHECK(p[0].cell == 3);
    CHECK(p[1].t == 0.5);
    CHECK(p[0].x == doctest::Approx(0.4));

    f.slices = {Vec::Zero(5), c};
    CHECK_THROWS_AS(reversal::peak_trajectory(f), Error);
}

TEST_CASE("focusing improves with volume") {
    const auto mono = testnet::mono();
    const auto nop = ldp::shoot_nop(mono, 1.0, 2.0, 1.0);
    std::vector<double> sups;
    for (double V : {10.0, 150.0}) {
        const auto dom = cme::LatticeDomain::from_cells(0, static_cast<std::int64_t>(4 * V), V);
        const auto f = reversal::npp_compute(mono, dom, 1.0, 2.0, 1.0, 500);
        double d = 0.0;
        for (std::size_t m = 50; m <= 450; ++m) d = std::max(d, std::abs(f.peak_x[m] - nop.x_at(f.time(m))[0]));
        sups.push_back(d);
    }
    CHECK(sups[1] < sups[0]);
}
