#include "revpath/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "revpath/error.hpp"

namespace revpath::ldp {

using crn::Direction;

namespace {

constexpr double exp_limit = 700.0;

double guarded_exp(double s) {
    if (std::abs(s) > exp_limit)
        throw NumericalError("Hamiltonian overflow: |nu . alpha| = " + std::to_string(std::abs(s)) + " exceeds 700");
    return std::exp(s);
}

double interp(const std::vector<double>& ts, const std::vector<double>& ys, double t) {
    if (t <= ts.front()) return ys.front();
    if (t >= ts.back()) return ys.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1.0 - w) * ys[k - 1] + w * ys[k];
}

Vec interp(const std::vector<double>& ts, const std::vector<Vec>& ys, double t) {
    if (t <= ts.front()) return ys.front();
    if (t >= ts.back()) return ys.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1.0 - w) * ys[k - 1] + w * ys[k];
}

Vec scalar(double v) { return Vec::Constant(1, v); }

void require_scalar(const crn::ReactionNetwork& net) {
    if (net.num_species() != 1) throw InvalidArgument("operation requires a single-species network");
}

// Orthonormal basis (columns) of the increment space.
Mat increment_space(const crn::ReactionNetwork& net) {
    const auto n = static_cast<Eigen::Index>(net.num_species());
    const auto info = crn::stoich_analysis(net);
    Mat b(n, static_cast<Eigen::Index>(info.increment_basis.size()));
    for (std::size_t c = 0; c < info.increment_basis.size(); ++c)
        for (Eigen::Index j = 0; j < n; ++j)
            b(j, static_cast<Eigen::Index>(c)) = static_cast<double>(info.increment_basis[c][static_cast<std::size_t>(j)]);
    if (b.cols() == 0) return b;
    Eigen::HouseholderQR<Mat> qr(b);
    return qr.householderQ() * Mat::Identity(n, b.cols());
}

} // namespace

double hamiltonian(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha) {
    double h = 0.0;
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const double s = net.stoichiometry_vector(i).dot(alpha);
        const double e = guarded_exp(s);
        h += net.macroscopic_rate(i, Direction::forward, x) * (e - 1.0) +
             net.macroscopic_rate(i, Direction::backward, x) * (1.0 / e - 1.0);
    }
    return h;
}

Vec hamiltonian_grad_alpha(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha) {
    Vec g = Vec::Zero(alpha.size());
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const Vec nu = net.stoichiometry_vector(i);
        const double e = guarded_exp(nu.dot(alpha));
        g += (net.macroscopic_rate(i, Direction::forward, x) * e - net.macroscopic_rate(i, Direction::backward, x) / e) *
             nu;
    }
    return g;
}

Vec hamiltonian_grad_x(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha) {
    Vec g = Vec::Zero(x.size());
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const double e = guarded_exp(net.stoichiometry_vector(i).dot(alpha));
        g += (e - 1.0) * net.rate_gradient(i, Direction::forward, x) +
             (1.0 / e - 1.0) * net.rate_gradient(i, Direction::backward, x);
    }
    return g;
}

Mat hamiltonian_hess_alpha(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha) {
    Mat h = Mat::Zero(alpha.size(), alpha.size());
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const Vec nu = net.stoichiometry_vector(i);
        const double e = guarded_exp(nu.dot(alpha));
        h += (net.macroscopic_rate(i, Direction::forward, x) * e + net.macroscopic_rate(i, Direction::backward, x) / e) *
             (nu * nu.transpose());
    }
    return h;
}

Mat hamiltonian_hess_x_alpha(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha) {
    Mat h = Mat::Zero(x.size(), alpha.size());
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const Vec nu = net.stoichiometry_vector(i);
        const double e = guarded_exp(nu.dot(alpha));
        const Vec w = e * net.rate_gradient(i, Direction::forward, x) - net.rate_gradient(i, Direction::backward, x) / e;
        h += w * nu.transpose();
    }
    return h;
}

Mat hamiltonian_hess_x(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha) {
    Mat h = Mat::Zero(x.size(), x.size());
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const double e = guarded_exp(net.stoichiometry_vector(i).dot(alpha));
        h += (e - 1.0) * net.rate_hessian(i, Direction::forward, x) +
             (1.0 / e - 1.0) * net.rate_hessian(i, Direction::backward, x);
    }
    return h;
}

// -- Legendre transform -------------------------------------------------------------

namespace {

struct LegendreSolution {
    Vec alpha;
    bool feasible = true;
};

LegendreSolution solve_legendre(const crn::ReactionNetwork& net, const Vec& x, const Vec& beta) {
    if (beta.size() != static_cast<Eigen::Index>(net.num_species()))
        throw InvalidArgument("beta dimension does not match the number of species");
    const Mat q = increment_space(net);
    const double scale = 1.0 + beta.norm();
    const Vec target = q.transpose() * beta;
    if ((beta - q * target).norm() > 1e-10 * scale) return {Vec::Zero(beta.size()), false};

    const auto r = q.cols();
    Vec c = Vec::Zero(r);
    auto residual = [&](const Vec& cc) { return Vec(q.transpose() * hamiltonian_grad_alpha(net, x, q * cc) - target); };
    Vec g = residual(c);
    const double tol = 1e-13 * scale;
    for (int iter = 0; iter < 100; ++iter) {
        if (g.norm() <= tol) return {q * c, true};
        const Mat hess = q.transpose() * hamiltonian_hess_alpha(net, x, q * c) * q;
        Vec step = hess.ldlt().solve(-g);
        if (!step.allFinite()) step = -g;
        // Damped Newton: halve until the gradient residual decreases.
        double lambda = 1.0;
        for (int k = 0; k < 60; ++k) {
            const Vec trial = c + lambda * step;
            try {
                const Vec gt = residual(trial);
                if (gt.norm() < g.norm()) {
                    c = trial;
                    g = gt;
                    break;
                }
            } catch (const NumericalError&) {
            }
            lambda *= 0.5;
        }
        if (lambda < 1e-15 && r == 1) break; // fall through to bisection
    }
    if (g.norm() <= tol) return {q * c, true};

    if (r == 1) {
        // dH/dc is increasing in c; bracket and bisect.
        auto f = [&](double v) { return residual(scalar(v))[0]; };
        double lo = c[0] - 1.0;
        double hi = c[0] + 1.0;
        for (int k = 0; k < 12 && f(lo) > 0.0; ++k) lo -= std::ldexp(1.0, k);
        for (int k = 0; k < 12 && f(hi) < 0.0; ++k) hi += std::ldexp(1.0, k);
        if (f(lo) <= 0.0 && f(hi) >= 0.0) {
            for (int k = 0; k < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++k) {
                const double mid = 0.5 * (lo + hi);
                (f(mid) < 0.0 ? lo : hi) = mid;
            }
            c[0] = 0.5 * (lo + hi);
            g = residual(c);
            if (g.norm() <= 1e-9 * scale) return {q * c, true};
        }
    }
    throw NumericalError("Legendre transform: Newton did not converge after 100 iterations (residual " +
                         std::to_string(g.norm()) + ")");
}

} // namespace

Vec legendre_momentum(const crn::ReactionNetwork& net, const Vec& x, const Vec& beta) {
    auto sol = solve_legendre(net, x, beta);
    if (!sol.feasible) throw InvalidArgument("beta lies outside the increment space");
    return sol.alpha;
}

double lagrangian(const crn::ReactionNetwork& net, const Vec& x, const Vec& beta) {
    const auto sol = solve_legendre(net, x, beta);
    if (!sol.feasible) return std::numeric_limits<double>::infinity();
    return sol.alpha.dot(beta) - hamiltonian(net, x, sol.alpha);
}

// -- Hamiltonian flow -----------------------------------------------------------------

Vec HamiltonianTrajectory::x_at(double t) const { return interp(times, x, t); }
Vec HamiltonianTrajectory::alpha_at(double t) const { return interp(times, alpha, t); }

namespace {

struct FlowState {
    Vec x, a;
    Mat dx, da;
};

struct FlowRate {
    Vec x, a;
    Mat dx, da;
};

FlowRate flow_rate(const crn::ReactionNetwork& net, const FlowState& s, bool variational) {
    FlowRate r{hamiltonian_grad_alpha(net, s.x, s.a), -hamiltonian_grad_x(net, s.x, s.a), {}, {}};
    if (variational) {
        const Mat haa = hamiltonian_hess_alpha(net, s.x, s.a);
        const Mat hxa = hamiltonian_hess_x_alpha(net, s.x, s.a);
        const Mat hxx = hamiltonian_hess_x(net, s.x, s.a);
        r.dx = hxa.transpose() * s.dx + haa * s.da;
        r.da = -hxx * s.dx - hxa * s.da;
    }
    return r;
}

FlowState advance(const FlowState& s, const FlowRate& r, double h, bool variational) {
    FlowState out{s.x + h * r.x, s.a + h * r.a, {}, {}};
    if (variational) {
        out.dx = s.dx + h * r.dx;
        out.da = s.da + h * r.da;
    }
    return out;
}

FlowState rk4(const crn::ReactionNetwork& net, const FlowState& s, double h, bool variational) {
    const FlowRate k1 = flow_rate(net, s, variational);
    const FlowRate k2 = flow_rate(net, advance(s, k1, 0.5 * h, variational), variational);
    const FlowRate k3 = flow_rate(net, advance(s, k2, 0.5 * h, variational), variational);
    const FlowRate k4 = flow_rate(net, advance(s, k3, h, variational), variational);
    FlowState out{s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                  s.a + (h / 6.0) * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a), {}, {}};
    if (variational) {
        out.dx = s.dx + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        out.da = s.da + (h / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
    }
    return out;
}

double lagrangian_density(const crn::ReactionNetwork& net, const Vec& x, const Vec& a) {
    return a.dot(hamiltonian_grad_alpha(net, x, a)) - hamiltonian(net, x, a);
}

} // namespace

HamiltonianTrajectory hamilton_flow(const crn::ReactionNetwork& net, const Vec& x0, const Vec& alpha0, double t_end,
                                    double dt, bool with_variational) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be non-negative");
    if (x0.size() != static_cast<Eigen::Index>(net.num_species()) || alpha0.size() != x0.size())
        throw InvalidArgument("state dimension does not match the number of species");
    const auto n = x0.size();
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9)));
    const double h = t_end / static_cast<double>(steps);

    HamiltonianTrajectory traj;
    traj.times.reserve(steps + 1);
    FlowState s{x0, alpha0, {}, {}};
    if (with_variational) {
        s.dx = Mat::Zero(n, n);
        s.da = Mat::Identity(n, n);
    }
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.x.push_back(s.x);
        traj.alpha.push_back(s.a);
        if (with_variational) {
            traj.dxdq.push_back(s.dx);
            traj.dadq.push_back(s.da);
        }
    };
    record(0.0);
    traj.action.push_back(0.0);
    double f_prev = lagrangian_density(net, s.x, s.a);
    double det_prev = 0.0;
    for (std::size_t k = 1; k <= steps && h > 0.0; ++k) {
        s = rk4(net, s, h, with_variational);
        if (!s.x.allFinite() || !s.a.allFinite()) throw NumericalError("Hamiltonian flow overflow");
        const double t = static_cast<double>(k) * h;
        record(t);
        const double f = lagrangian_density(net, s.x, s.a);
        traj.action.push_back(traj.action.back() + 0.5 * h * (f_prev + f));
        f_prev = f;
        if (with_variational) {
            const double det = s.dx.determinant();
            if (det_prev != 0.0 && det != 0.0 && (det > 0.0) != (det_prev > 0.0)) {
                const double tc = t - h * det / (det - det_prev);
                traj.conjugate_times.push_back(tc);
                traj.warnings.push_back("conjugate point near t = " + std::to_string(tc));
            }
            if (det != 0.0) det_prev = det;
        }
    }
    if (h == 0.0) {
        // zero-length flow: keep a degenerate second sample so the time grid spans [0, 0]
        record(0.0);
        traj.action.push_back(0.0);
    }
    return traj;
}

double hitting_time(const crn::ReactionNetwork& net, double x0, double alpha0, double xT, double t_max, double dt) {
    require_scalar(net);
    if (x0 == xT) return 0.0;
    const double side = xT > x0 ? 1.0 : -1.0;
    FlowState s{scalar(x0), scalar(alpha0), {}, {}};
    double t = 0.0;
    while (t < t_max) {
        const double h = std::min(dt, t_max - t);
        const FlowState next = rk4(net, s, h, false);
        if (!next.x.allFinite() || !next.a.allFinite()) throw NumericalError("Hamiltonian flow overflow");
        const double before = side * (s.x[0] - xT);
        const double after = side * (next.x[0] - xT);
        if (after >= 0.0) return t + h * (-before) / (after - before);
        s = next;
        t += h;
    }
    return std::numeric_limits<double>::infinity();
}

HamiltonianTrajectory shoot_nop(const crn::ReactionNetwork& net, double x0, double xT, double T,
                                const ShootingOptions& options) {
    require_scalar(net);
    if (!(T > 0.0)) throw InvalidArgument("T must be positive");
    if (!(x0 > 0.0) || !(xT > 0.0)) throw InvalidArgument("x0 and xT must be positive");
    if (x0 == xT) {
        if (std::abs(hamiltonian_grad_alpha(net, scalar(x0), scalar(0.0))[0]) > 1e-12)
            throw InvalidArgument("x0 == xT is only supported at an equilibrium");
        return hamilton_flow(net, scalar(x0), scalar(0.0), T, options.dt, options.with_variational);
    }

    // u is the momentum measured toward the target; T(u) decreases in u.
    const double side = xT > x0 ? 1.0 : -1.0;
    const double t_cap = 2.0 * T + options.dt;
    auto time_of = [&](double u) { return hitting_time(net, x0, side * u, xT, t_cap, options.dt); };

    double hi = 0.5;
    double t_hi = time_of(hi);
    while (t_hi > T) {
        if (hi >= options.alpha_limit)
            throw NumericalError("shooting: no bracket found for alpha0 within [-" + std::to_string(options.alpha_limit) +
                                 ", " + std::to_string(options.alpha_limit) + "]");
        hi = std::min(2.0 * hi, options.alpha_limit);
        t_hi = time_of(hi);
    }
    double lo = 0.0;
    double t_lo = time_of(lo);
    while (t_lo <= T) {
        if (lo <= -options.alpha_limit)
            throw NumericalError("shooting: no bracket found for alpha0 within [-" + std::to_string(options.alpha_limit) +
                                 ", " + std::to_string(options.alpha_limit) + "]");
        hi = lo;
        t_hi = t_lo;
        lo = std::max(lo - 1.0, -options.alpha_limit);
        t_lo = time_of(lo);
    }

    double u = 0.5 * (lo + hi);
    for (int iter = 0;; ++iter) {
        u = 0.5 * (lo + hi);
        const double t_mid = time_of(u);
        if (t_mid > t_lo || t_mid < t_hi)
            throw NumericalError("shooting: non-monotone hitting-time map near alpha0 = " + std::to_string(side * u));
        if (std::abs(t_mid - T) <= options.tol) break;
        if (t_mid > T) {
            lo = u;
            t_lo = t_mid;
        } else {
            hi = u;
            t_hi = t_mid;
        }
        if (hi - lo <= 1e-15 * (1.0 + std::abs(u)) || iter > 200)
            throw NumericalError("shooting: hitting-time map is discontinuous near alpha0 = " +
                                 std::to_string(side * u));
    }
    auto traj = hamilton_flow(net, scalar(x0), scalar(side * u), T, options.dt, options.with_variational);
    if (std::abs(traj.x.back()[0] - xT) > 1e-3)
        traj.warnings.push_back("endpoint mismatch " + std::to_string(traj.x.back()[0] - xT));
    return traj;
}

double nop_action(const HamiltonianTrajectory& traj, double t) {
    if (traj.times.empty()) throw InvalidArgument("empty trajectory");
    if (t < traj.times.front() - 1e-12 || t > traj.times.back() + 1e-12)
        throw InvalidArgument("t outside the trajectory time range");
    return interp(traj.times, traj.action, t);
}

double nop_tail_action(const HamiltonianTrajectory& traj, double t) {
    return traj.action.back() - nop_action(traj, t);
}

// -- Quasipotential -------------------------------------------------------------------

double stationary_momentum(const crn::ReactionNetwork& net, double x) {
    const crn::ScalarChain chain(net);
    const double g = chain.lattice_step();
    if (chain.is_birth_death()) {
        const double up = chain.up_rate(0, x);
        const double down = chain.down_rate(0, x);
        if (!(up > 0.0) || !(down > 0.0))
            throw InvalidArgument("quasipotential: a rate vanishes at x = " + std::to_string(x));
        return std::log(down / up) / (g * chain.jump_multiples()[0]);
    }
    // General jump sizes: H(x, .) is convex with H(x, 0) = 0, H'(x, 0) = F(x),
    // so the other zero lies on the side opposite to F.
    const Vec xv = scalar(x);
    const double f = hamiltonian_grad_alpha(net, xv, scalar(0.0))[0];
    for (std::size_t k = 0; k < chain.num_groups(); ++k)
        if (!(chain.up_rate(k, x) > 0.0) || !(chain.down_rate(k, x) > 0.0))
            throw InvalidArgument("quasipotential: a rate vanishes at x = " + std::to_string(x));
    if (std::abs(f) <= 1e-14) return 0.0;
    const double dir = f > 0.0 ? -1.0 : 1.0;
    auto h = [&](double a) { return hamiltonian(net, xv, scalar(a)); };
    double far = dir * 1e-3;
    while (h(far) < 0.0) far *= 2.0;
    double near = far / 2.0;
    while (h(near) >= 0.0 && std::abs(near) > 1e-300) near /= 2.0;
    boost::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    const auto root = boost::math::tools::toms748_solve(h, std::min(near, far), std::max(near, far), tol, iters);
    return 0.5 * (root.first + root.second);
}

double stationary_momentum_derivative(const crn::ReactionNetwork& net, double x) {
    const crn::ScalarChain chain(net);
    if (chain.is_birth_death()) {
        const double up = chain.up_rate(0, x);
        const double down = chain.down_rate(0, x);
        if (!(up > 0.0) || !(down > 0.0))
            throw InvalidArgument("quasipotential: a rate vanishes at x = " + std::to_string(x));
        return (chain.down_rate_derivative(0, x) / down - chain.up_rate_derivative(0, x) / up) /
               (chain.lattice_step() * chain.jump_multiples()[0]);
    }
    // Implicit differentiation of H(x, a(x)) = 0, away from equilibria.
    const double a = stationary_momentum(net, x);
    const Vec xv = scalar(x);
    const Vec av = scalar(a);
    const double ha = hamiltonian_grad_alpha(net, xv, av)[0];
    if (std::abs(ha) > 1e-8) return -hamiltonian_grad_x(net, xv, av)[0] / ha;
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    return (stationary_momentum(net, x + h) - stationary_momentum(net, x - h)) / (2.0 * h);
}

double Quasipotential1D::value_at(double x) const { return interp(grid, S, x); }

Quasipotential1D quasipotential_1d(const crn::ReactionNetwork& net, double x_eq, const std::vector<double>& grid) {
    require_scalar(net);
    if (grid.empty()) throw InvalidArgument("empty quasipotential grid");
    if (!std::is_sorted(grid.begin(), grid.end())) throw InvalidArgument("quasipotential grid must be increasing");

    Quasipotential1D out;
    out.grid = grid;
    out.x_eq = x_eq;
    out.gradient = [net](double x) { return stationary_momentum(net, x); };
    const auto& dS = out.gradient;

    auto integrate = [&](double a, double b) {
        if (a == b) return 0.0;
        const auto panels = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / 0.05)));
        const double w = (b - a) / panels;
        double total = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double lo = a + p * w;
            total += boost::math::quadrature::gauss<double, 15>::integrate(dS, lo, p + 1 == panels ? b : lo + w);
        }
        return total;
    };

    out.S.resize(grid.size());
    out.dS.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) out.dS[k] = dS(grid[k]);
    const auto split = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), x_eq) - grid.begin());
    double acc = 0.0;
    double at = x_eq;
    for (std::size_t k = split; k < grid.size(); ++k) {
        acc += integrate(at, grid[k]);
        at = grid[k];
        out.S[k] = acc;
    }
    acc = 0.0;
    at = x_eq;
    for (std::size_t k = split; k-- > 0;) {
        acc += integrate(at, grid[k]);
        at = grid[k];
        out.S[k] = acc;
    }
    return out;
}

HamiltonianTrajectory op_path(const crn::ReactionNetwork& net, const Quasipotential1D& quasi, double xT,
                              const OpOptions& options) {
    require_scalar(net);
    if (!(options.dt > 0.0)) throw InvalidArgument("dt must be positive");
    const double x_eq = quasi.x_eq;
    auto velocity = [&](double x) { return hamiltonian_grad_alpha(net, scalar(x), scalar(quasi.gradient(x)))[0]; };

    // Integrate in backward time s = -t: dx/ds = -xdot.
    std::vector<double> xs{xT};
    double x = xT;
    const double h = options.dt;
    double s = 0.0;
    while (std::abs(x - x_eq) >= options.tolerance) {
        if (s > options.horizon)
            throw NumericalError("OP did not reach the equilibrium within backward time " +
                                 std::to_string(options.horizon));
        const double k1 = -velocity(x);
        const double k2 = -velocity(x + 0.5 * h * k1);
        const double k3 = -velocity(x + 0.5 * h * k2);
        const double k4 = -velocity(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(x)) throw NumericalError("OP integration overflow");
        s += h;
        xs.push_back(x);
    }

    HamiltonianTrajectory traj;
    const std::size_t n = xs.size();
    traj.times.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = n - 1 - k;
        traj.times[k] = -static_cast<double>(src) * h;
        traj.x.push_back(scalar(xs[src]));
        traj.alpha.push_back(scalar(quasi.gradient(xs[src])));
    }
    traj.times.back() = 0.0;
    traj.action.push_back(0.0);
    double f_prev = lagrangian_density(net, traj.x[0], traj.alpha[0]);
    for (std::size_t k = 1; k < n; ++k) {
        const double f = lagrangian_density(net, traj.x[k], traj.alpha[k]);
        traj.action.push_back(traj.action.back() + 0.5 * h * (f_prev + f));
        f_prev = f;
    }
    return traj;
}

double hamiltonian_residual(const crn::ReactionNetwork& net, const HamiltonianTrajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k)
        worst = std::max(worst, std::abs(hamiltonian(net, traj.x[k], traj.alpha[k])));
    return worst;
}

std::pair<double, double> choose_domain(const crn::ReactionNetwork& net, double x_eq, double x0, double xT,
                                        double action, double margin, double floor) {
    require_scalar(net);
    const double target = (1.0 + margin) * action;
    const double step = 5e-3;
    auto quad = [&](double a, double b) {
        return boost::math::quadrature::gauss<double, 15>::integrate(
            [&](double u) { return stationary_momentum(net, u); }, a, b);
    };

    double lo = std::min({x0, xT, x_eq});
    double s_lo = quad(x_eq, lo);
    while (s_lo < target && lo > floor) {
        const double next = std::max(floor, lo - step);
        s_lo += quad(lo, next);
        lo = next;
    }
    double hi = std::max({x0, xT, x_eq});
    double s_hi = quad(x_eq, hi);
    while (s_hi < target) {
        if (hi > 1e4) throw NumericalError("choose_domain: quasipotential does not reach the required level");
        s_hi += quad(hi, hi + step);
        hi += step;
    }
    return {lo, hi};
}

} // namespace revpath::ldp
