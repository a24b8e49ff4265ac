#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "revpath/crn.hpp"
#include "revpath/ldp.hpp"
#include "revpath/reversal.hpp"

namespace revpath::gausslim {

/// Stationary reversed drift G(x) = -dH/da(x, S'(x)).
double reversed_drift_stat(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double x);
/// Stationary reversed diffusion J(x) = d^2H/da^2(x, S'(x)).
double reversed_diffusion_stat(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double x);
/// dG/dx using S''(x) from ldp::stationary_momentum_derivative.
double reversed_drift_stat_derivative(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double x);

/// dS/dx = alpha and, where the variational data allow, d^2S/dx^2 =
/// (da/dq)/(dx/dq) along a NOP.
struct GradientAlongPath {
    std::vector<double> times;
    std::vector<double> dS;
    std::vector<double> d2S; // NaN where dx/dq vanishes (t = 0 for a point source)
};

/// Throws NumericalError when dx/dq vanishes at an interior time of [t_lo, t_hi].
GradientAlongPath grad_S_along_nop(const ldp::HamiltonianTrajectory& traj, double t_lo, double t_hi);

struct CovariancePath {
    std::vector<double> times;
    std::vector<double> kappa;
    std::string provenance;

    double at(double t) const; // linear interpolation
};

/// RK4 for k' = 2 A(t) k + B(t) (scalar Lyapunov equation) on a uniform grid
/// from t0 to t1 with k(t0) = k0.
CovariancePath lyapunov_cov(const std::function<double(double)>& A, const std::function<double(double)>& B,
                            double t0, double t1, double dt, double k0 = 0.0);

/// SPP covariance along the reversed OP x^(t) from xT: A = G'(x^), B = J(x^).
CovariancePath spp_covariance(const crn::ReactionNetwork& net, const ldp::Quasipotential1D& quasi, double xT,
                              double t_end, double dt);

/// NPP covariance kappa(t) on [0, T] from a shooting NOP with variational
/// data: kbar' = 2 G_x kbar + J in s = T - t with G_x = -H_ax - H_aa S_xx,
/// J = H_aa, kbar(0) = 0, kappa(t) = kbar(T - t). Near the point source the
/// equation is stiff; the path stops `t_min` short of t = 0 and closes with
/// kappa(0) = 0.
CovariancePath npp_covariance(const crn::ReactionNetwork& net, const ldp::HamiltonianTrajectory& nop,
                              double t_min = 2e-3);

/// iota = -2 F'(x_eq) / J0(x_eq), J0 = sum nu^2 (R+ + R-).
double riccati_equilibrium(const crn::ReactionNetwork& net, double x_eq);

struct SliceFit {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t cells_used = 0;
};

/// Quadratic fit of log q over cells with q >= window * max(q). A point mass
/// yields variance 0; 2 to 4 usable cells is an error.
SliceFit fit_slice(const std::vector<double>& cells, const Vec& q, double window = 1e-3);

struct EnvelopeRow {
    double t;
    double fitted_var;
    double predicted_var;
    double tv_distance;
};

/// Compares prehistory slices at `times` with the Gaussian N(path(t), kappa(t)/V).
std::vector<EnvelopeRow> gaussian_envelope(const reversal::PrehistoryField& field, const CovariancePath& cov,
                                           const std::function<double(double)>& path,
                                           const std::vector<double>& times);

} // namespace revpath::gausslim
