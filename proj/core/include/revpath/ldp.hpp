#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "revpath/crn.hpp"
#include "revpath/types.hpp"

namespace revpath::ldp {

// H(x, a) = sum_i R+_i(x)(e^{nu_i.a} - 1) + R-_i(x)(e^{-nu_i.a} - 1).
// All evaluations throw NumericalError when some |nu_i.a| exceeds 700.
double hamiltonian(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha);
Vec hamiltonian_grad_alpha(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha);
Vec hamiltonian_grad_x(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha);
Mat hamiltonian_hess_alpha(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha);
/// Mixed block d^2H / dx_j da_k (row j, column k).
Mat hamiltonian_hess_x_alpha(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha);
Mat hamiltonian_hess_x(const crn::ReactionNetwork& net, const Vec& x, const Vec& alpha);

/// Legendre transform L(x, b) = sup_a (a.b - H(x, a)). Returns +infinity when
/// b has a component outside the increment space.
double lagrangian(const crn::ReactionNetwork& net, const Vec& x, const Vec& beta);

/// Maximizer a* of the Legendre transform, restricted to the increment space.
Vec legendre_momentum(const crn::ReactionNetwork& net, const Vec& x, const Vec& beta);

struct HamiltonianTrajectory {
    std::vector<double> times;
    std::vector<Vec> x;
    std::vector<Vec> alpha;
    std::vector<double> action; // cumulative int (a.xdot - H) dt, trapezoid
    // Variational sensitivities, present when requested.
    std::vector<Mat> dxdq;
    std::vector<Mat> dadq;
    std::vector<double> conjugate_times; // sign changes of det(dx/dq) after t = 0
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return times.size(); }
    bool has_variational() const noexcept { return !dxdq.empty(); }
    double alpha0() const { return alpha.front()[0]; }
    Vec x_at(double t) const;
    Vec alpha_at(double t) const;
};

/// RK4 for xdot = dH/da, adot = -dH/dx over [0, t_end] with steps of at most dt
/// (the grid is uniform and ends exactly at t_end). With `with_variational`,
/// dx/dq and da/dq are co-integrated from dx/dq(0) = 0, da/dq(0) = I, the
/// point-source data for which d^2S/dx^2 = (da/dq)(dx/dq)^{-1}.
HamiltonianTrajectory hamilton_flow(const crn::ReactionNetwork& net, const Vec& x0, const Vec& alpha0, double t_end,
                                    double dt, bool with_variational = false);

/// First time the scalar flow from (x0, alpha0) crosses xT (linear interpolation
/// between RK4 steps), or +infinity if it does not within t_max.
double hitting_time(const crn::ReactionNetwork& net, double x0, double alpha0, double xT, double t_max, double dt);

struct ShootingOptions {
    double tol = 1e-6;       // on |T(alpha0) - T|
    double dt = 1e-4;
    double alpha_limit = 50; // bracket search range [-limit, limit]
    bool with_variational = true;
};

/// Non-stationary optimal path between x0 and xT in time T (single species).
HamiltonianTrajectory shoot_nop(const crn::ReactionNetwork& net, double x0, double xT, double T,
                                const ShootingOptions& options = {});

/// Partial action int_0^t (a.xdot - H) du, linear between stored samples.
double nop_action(const HamiltonianTrajectory& traj, double t);
/// Tail integral int_t^T (a.xdot - H) du.
double nop_tail_action(const HamiltonianTrajectory& traj, double t);

/// Scalar quasipotential S(x) = int_{x_eq}^x dS(u) du, where dS(u) is the
/// non-trivial root of H(u, .) = 0 (ln(R-/R+)/nu for a birth-death chain).
struct Quasipotential1D {
    std::vector<double> grid;
    std::vector<double> S;
    std::vector<double> dS;
    double x_eq = 0.0;
    std::function<double(double)> gradient; // dS at any admissible point

    double value_at(double x) const; // linear interpolation on the grid
};

Quasipotential1D quasipotential_1d(const crn::ReactionNetwork& net, double x_eq, const std::vector<double>& grid);

/// dS(x) for a single-species network: the non-zero root of H(x, .) = 0.
double stationary_momentum(const crn::ReactionNetwork& net, double x);
/// d/dx of stationary_momentum, i.e. S''(x).
double stationary_momentum_derivative(const crn::ReactionNetwork& net, double x);

struct OpOptions {
    double dt = 1e-4;
    double tolerance = 1e-6; // stop once |x - x_eq| < tolerance
    double horizon = 200.0;  // give up beyond this much backward time
};

/// Stationary optimal path ending at xT at t = 0, integrated backward in time
/// along xdot = dH/da(x, dS(x)) until it is within tolerance of x_eq. Times in
/// the result run from -t_stop up to 0.
HamiltonianTrajectory op_path(const crn::ReactionNetwork& net, const Quasipotential1D& quasi, double xT,
                              const OpOptions& options = {});

/// Largest |H(x, dS(x))| over the trajectory (zero along an exact OP).
double hamiltonian_residual(const crn::ReactionNetwork& net, const HamiltonianTrajectory& traj);

/// Interval [lo, hi] containing x0 and xT whose endpoints both have
/// quasipotential at least (1 + margin) * action. The lower end is clipped at
/// `floor` when the quasipotential never gets that high on the way to 0.
std::pair<double, double> choose_domain(const crn::ReactionNetwork& net, double x_eq, double x0, double xT,
                                        double action, double margin = 0.1, double floor = 1e-3);

} // namespace revpath::ldp
