#include "revpath/gausslim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "revpath/error.hpp"
#include "revpath/kinetics.hpp"

namespace revpath::gausslim {

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

double h_a(const crn::ReactionNetwork& net, double x, double a) {
    return ldp::hamiltonian_grad_alpha(net, scalar(x), scalar(a))[0];
}
double h_aa(const crn::ReactionNetwork& net, double x, double a) {
    return ldp::hamiltonian_hess_alpha(net, scalar(x), scalar(a))(0, 0);
}
double h_xa(const crn::ReactionNetwork& net, double x, double a) {
    return ldp::hamiltonian_hess_x_alpha(net, scalar(x), scalar(a))(0, 0);
}

} // namespace

double reversed_drift_stat(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double x) {
    return -h_a(net, x, quasi.gradient(x));
}

double reversed_diffusion_stat(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double x) {
    return h_aa(net, x, quasi.gradient(x));
}

double reversed_drift_stat_derivative(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double x) {
    const double a = quasi.gradient(x);
    return -h_xa(net, x, a) - h_aa(net, x, a) * ldp::stationary_momentum_derivative(net, x);
}

GradientAlongPath grad_S_along_nop(const ldp::HamiltonianTrajectory& traj, double t_lo, double t_hi) {
    if (!traj.has_variational()) throw InvalidArgument("trajectory carries no variational data");
    if (traj.x.front().size() != 1) throw InvalidArgument("grad_S_along_nop supports single-species paths");
    for (double tc : traj.conjugate_times)
        if (tc >= t_lo && tc <= t_hi)
            throw NumericalError("conjugate point at t = " + std::to_string(tc) + " inside the requested window");
    GradientAlongPath out;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times[k];
        const double dx = traj.dxdq[k](0, 0);
        out.times.push_back(t);
        out.dS.push_back(traj.alpha[k][0]);
        if (std::abs(dx) > 1e-300) {
            out.d2S.push_back(traj.dadq[k](0, 0) / dx);
        } else {
            if (t > t_lo && t < t_hi)
                throw NumericalError("dx/dq vanishes at t = " + std::to_string(t) + " inside the requested window");
            out.d2S.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return out;
}

double CovariancePath::at(double t) const {
    if (times.empty()) throw InvalidArgument("empty covariance path");
    if (t <= times.front()) return kappa.front();
    if (t >= times.back()) return kappa.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - w) * kappa[k - 1] + w * kappa[k];
}

CovariancePath lyapunov_cov(const std::function<double(double)>& A, const std::function<double(double)>& B,
                            double t0, double t1, double dt, double k0) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(t1 >= t0)) throw InvalidArgument("lyapunov_cov requires t1 >= t0");
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9)));
    const double h = (t1 - t0) / static_cast<double>(steps);
    auto rate = [&](double t, double k) { return 2.0 * A(t) * k + B(t); };
    CovariancePath out;
    out.provenance = "lyapunov";
    out.times.push_back(t0);
    out.kappa.push_back(k0);
    double k = k0;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = t0 + static_cast<double>(n) * h;
        const double k1 = rate(t, k);
        const double k2 = rate(t + 0.5 * h, k + 0.5 * h * k1);
        const double k3 = rate(t + 0.5 * h, k + 0.5 * h * k2);
        const double k4 = rate(t + h, k + h * k3);
        k += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.times.push_back(t0 + static_cast<double>(n + 1) * h);
        out.kappa.push_back(k);
    }
    return out;
}

CovariancePath spp_covariance(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double xT,
                              double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw InvalidArgument("spp_covariance requires dt > 0 and t_end >= 0");
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9)));
    const double h = t_end / static_cast<double>(steps);
    auto rate = [&](double x, double k) {
        return std::pair{reversed_drift_stat(net, quasi, x),
                         2.0 * reversed_drift_stat_derivative(net, quasi, x) * k + reversed_diffusion_stat(net, quasi, x)};
    };
    CovariancePath out;
    out.provenance = "spp: G and J along the reversed OP from xT";
    double x = xT;
    double k = 0.0;
    out.times.push_back(0.0);
    out.kappa.push_back(0.0);
    for (std::size_t n = 0; n < steps; ++n) {
        const auto [x1, k1] = rate(x, k);
        const auto [x2, k2] = rate(x + 0.5 * h * x1, k + 0.5 * h * k1);
        const auto [x3, k3] = rate(x + 0.5 * h * x2, k + 0.5 * h * k2);
        const auto [x4, k4] = rate(x + h * x3, k + h * k3);
        x += (h / 6.0) * (x1 + 2.0 * x2 + 2.0 * x3 + x4);
        k += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.times.push_back(static_cast<double>(n + 1) * h);
        out.kappa.push_back(k);
    }
    return out;
}

CovariancePath npp_covariance(const crn::ReactionNetwork& net, const ldp::HamiltonianTrajectory& nop, double t_min) {
    if (!nop.has_variational()) throw InvalidArgument("NOP carries no variational data");
    if (nop.x.front().size() != 1) throw InvalidArgument("npp_covariance supports single-species paths");
    const std::size_t last = nop.size() - 1;
    if (last < 2) throw InvalidArgument("NOP grid too coarse");
    const double T = nop.times[last];

    // Coefficients at stored samples; RK4 uses every other sample as a node
    // and the one in between as its midpoint.
    auto coeffs = [&](std::size_t k) {
        const double x = nop.x[k][0];
        const double a = nop.alpha[k][0];
        const double sxx = nop.dadq[k](0, 0) / nop.dxdq[k](0, 0);
        const double haa = h_aa(net, x, a);
        return std::pair{-h_xa(net, x, a) - haa * sxx, haa};
    };
    auto rate = [&](std::size_t k, double kb) {
        const auto [gx, j] = coeffs(k);
        return 2.0 * gx * kb + j;
    };

    std::vector<double> ts{T};
    std::vector<double> ks{0.0};
    double kb = 0.0;
    std::size_t k = last;
    while (k >= 2 && nop.times[k - 2] >= t_min) {
        const double h = nop.times[k] - nop.times[k - 2];
        const double r1 = rate(k, kb);
        const double r2 = rate(k - 1, kb + 0.5 * h * r1);
        const double r3 = rate(k - 1, kb + 0.5 * h * r2);
        const double r4 = rate(k - 2, kb + h * r3);
        kb += (h / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
        if (!std::isfinite(kb)) throw NumericalError("NPP Lyapunov integration overflow");
        k -= 2;
        ts.push_back(nop.times[k]);
        ks.push_back(kb);
    }
    ts.push_back(0.0);
    ks.push_back(0.0);
    CovariancePath out;
    out.provenance = "npp: reversed Lyapunov equation along the NOP";
    out.times.assign(ts.rbegin(), ts.rend());
    out.kappa.assign(ks.rbegin(), ks.rend());
    return out;
}

double riccati_equilibrium(const crn::ReactionNetwork& net, double x_eq) {
    if (net.num_species() != 1) throw InvalidArgument("riccati_equilibrium supports single-species networks");
    const Vec x = scalar(x_eq);
    const double fprime = kinetics::ode_jacobian(net, x)(0, 0);
    if (fprime >= 0.0) throw InvalidArgument("x_eq = " + std::to_string(x_eq) + " is not a stable equilibrium");
    double j0 = 0.0;
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const double nu = net.stoichiometry(i)[0];
        j0 += nu * nu *
              (net.macroscopic_rate(i, crn::Direction::forward, x) + net.macroscopic_rate(i, crn::Direction::backward, x));
    }
    return -2.0 * fprime / j0;
}

SliceFit fit_slice(const std::vector<double>& cells, const Vec& q, double window) {
    if (cells.empty() || static_cast<std::size_t>(q.size()) < cells.size())
        throw InvalidArgument("slice shorter than the cell list");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (q[static_cast<Eigen::Index>(i)] > q[static_cast<Eigen::Index>(arg)]) arg = i;
    const double peak = q[static_cast<Eigen::Index>(arg)];
    if (!(peak > 0.0)) throw InvalidArgument("all-zero slice");
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (q[static_cast<Eigen::Index>(i)] >= window * peak) used.push_back(i);
    if (used.size() == 1) return {cells[arg], 0.0, 1};
    if (used.size() < 5) throw InvalidArgument("fewer than 5 cells in the fit window");

    Mat design(static_cast<Eigen::Index>(used.size()), 3);
    Vec rhs(static_cast<Eigen::Index>(used.size()));
    for (std::size_t r = 0; r < used.size(); ++r) {
        const double u = cells[used[r]] - cells[arg];
        const auto row = static_cast<Eigen::Index>(r);
        design(row, 0) = 1.0;
        design(row, 1) = u;
        design(row, 2) = u * u;
        rhs[row] = std::log(q[static_cast<Eigen::Index>(used[r])]);
    }
    const Vec c = design.colPivHouseholderQr().solve(rhs);
    if (!(c[2] < 0.0)) throw NumericalError("log-slice is not concave near its peak");
    return {cells[arg] - c[1] / (2.0 * c[2]), -1.0 / (2.0 * c[2]), used.size()};
}

std::vector<EnvelopeRow> gaussian_envelope(const reversal::PrehistoryField& field, const CovariancePath& cov,
                                           const std::function<double(double)>& path,
                                           const std::vector<double>& times) {
    std::vector<EnvelopeRow> out;
    const std::size_t nx = field.cells.size();
    for (double t : times) {
        const auto m = static_cast<std::size_t>(std::llround(t / field.dt));
        if (m > field.steps()) throw InvalidArgument("time outside the prehistory field");
        const Vec& q = field.slices[m];
        const SliceFit fit = fit_slice(field.cells, q);
        const double predicted = cov.at(t) / field.volume;
        const double mu = path(t);

        double tv = 0.0;
        if (predicted <= 0.0) {
            std::size_t near = 0;
            for (std::size_t i = 1; i < nx; ++i)
                if (std::abs(field.cells[i] - mu) < std::abs(field.cells[near] - mu)) near = i;
            tv = 1.0 - q[static_cast<Eigen::Index>(near)];
        } else {
            const double sd = std::sqrt(predicted);
            std::vector<double> g(nx, 0.0);
            double norm = 0.0;
            for (std::size_t i = 0; i < nx; ++i) {
                const double z = (field.cells[i] - mu) / sd;
                if (std::abs(z) <= 4.0) {
                    g[i] = std::exp(-0.5 * z * z);
                    norm += g[i];
                }
            }
            for (std::size_t i = 0; i < nx; ++i) {
                const double qi = q[static_cast<Eigen::Index>(i)];
                tv += norm > 0.0 && g[i] > 0.0 ? std::abs(qi - g[i] / norm) : qi;
            }
            tv *= 0.5;
        }
        out.push_back({t, fit.variance, predicted, tv});
    }
    return out;
}

} // namespace revpath::gausslim
