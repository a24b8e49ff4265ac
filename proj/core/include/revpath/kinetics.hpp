#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "revpath/crn.hpp"
#include "revpath/types.hpp"

namespace revpath::kinetics {

/// Sampled path of concentrations. Jump trajectories are piecewise constant
/// between recorded times; ODE trajectories are sampled on a fixed grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::optional<double> volume; // absent for the deterministic limit

    bool absorbed = false;           // tau-leap left the non-negative orthant
    std::size_t sqrt_truncations = 0; // CLE: propensities clipped at 0 under the root

    std::size_t size() const noexcept { return times.size(); }
    /// State at time t (right-continuous step for jump paths, linear for ODE paths).
    Vec at(double t) const;
};

Vec ode_field(const crn::ReactionNetwork& net, const Vec& x);
Mat ode_jacobian(const crn::ReactionNetwork& net, const Vec& x);

/// Fixed-step RK4 for xdot = F(x), sampled every dt up to t_end (last step shortened).
/// Throws NumericalError naming the time at which the state left R_+^N.
Trajectory ode_solve(const crn::ReactionNetwork& net, const Vec& x0, double t_end, double dt);

struct SsaOptions {
    /// Abort when |x| exceeds this. Default (unset): 10 |x0| + 10.
    std::optional<double> blowup_bound;
    /// Stream index under the master seed (ensembles use the member index).
    std::uint64_t stream = 0;
};

/// Gillespie direct method. x0 * V must be integral.
Trajectory ssa_simulate(const crn::ReactionNetwork& net, const Vec& x0, double volume, double t_end,
                        std::uint64_t seed, const SsaOptions& options = {});

/// Euler tau-leaping sampled every dt. A step that would make any population
/// negative sets `absorbed`, records the clamped state and stops the path.
Trajectory tau_leap_simulate(const crn::ReactionNetwork& net, const Vec& x0, double volume, double t_end,
                             double dt, std::uint64_t seed, std::uint64_t stream = 0);

/// Euler-Maruyama for the chemical Langevin equation. volume = +inf gives
/// plain Euler stepping of the ODE.
Trajectory cle_simulate(const crn::ReactionNetwork& net, const Vec& x0, double volume, double t_end, double dt,
                        std::uint64_t seed, std::uint64_t stream = 0);

/// Covariance of the forward Gaussian fluctuation process around the ODE
/// solution from x0: Sigma' = A Sigma + Sigma A^T + B, Sigma(0) = 0, with
/// A = dF/dx and B = sum nu nu^T (R+ + R-) along x_inf(t). t_grid must be
/// increasing and start at 0; RK4 substeps are at most `max_step`.
std::vector<Mat> forward_clt_cov(const crn::ReactionNetwork& net, const Vec& x0, std::span<const double> t_grid,
                                 double max_step = 1e-3);

/// Per-time ensemble mean and (unbiased) variance of each species.
struct EnsembleSummary {
    std::vector<double> times;
    std::vector<Vec> mean;
    std::vector<Vec> variance;
};

EnsembleSummary summarize(std::span<const Trajectory> ensemble, std::span<const double> t_grid);

/// sup_t |x(t) - y(t)| over a common grid (max-norm in space).
double sup_deviation(const Trajectory& a, const Trajectory& b, std::span<const double> t_grid);

} // namespace revpath::kinetics
