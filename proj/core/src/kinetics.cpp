#include "revpath/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "revpath/error.hpp"
#include "revpath/rng.hpp"

namespace revpath::kinetics {

using crn::Direction;

Vec Trajectory::at(double t) const {
    if (times.empty()) throw InvalidArgument("empty trajectory");
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin());
    if (volume) return states[k - 1];
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - w) * states[k - 1] + w * states[k];
}

Vec ode_field(const crn::ReactionNetwork& net, const Vec& x) {
    Vec f = Vec::Zero(static_cast<Eigen::Index>(net.num_species()));
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const double flux = net.macroscopic_rate(i, Direction::forward, x) - net.macroscopic_rate(i, Direction::backward, x);
        f += flux * net.stoichiometry_vector(i);
    }
    return f;
}

Mat ode_jacobian(const crn::ReactionNetwork& net, const Vec& x) {
    const auto n = static_cast<Eigen::Index>(net.num_species());
    Mat a = Mat::Zero(n, n);
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const Vec dflux = net.rate_gradient(i, Direction::forward, x) - net.rate_gradient(i, Direction::backward, x);
        a += net.stoichiometry_vector(i) * dflux.transpose();
    }
    return a;
}

namespace {

Vec rk4_step(const crn::ReactionNetwork& net, const Vec& x, double h) {
    const Vec k1 = ode_field(net, x);
    const Vec k2 = ode_field(net, x + 0.5 * h * k1);
    const Vec k3 = ode_field(net, x + 0.5 * h * k2);
    const Vec k4 = ode_field(net, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<std::int64_t> to_populations(const Vec& x0, double volume) {
    if (!(volume > 0.0) || !std::isfinite(volume)) throw InvalidArgument("volume must be positive and finite");
    std::vector<std::int64_t> n(static_cast<std::size_t>(x0.size()));
    for (Eigen::Index j = 0; j < x0.size(); ++j) {
        const double scaled = x0[j] * volume;
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled)))
            throw InvalidArgument("V * x0 must be an integer vector");
        if (rounded < 0) throw InvalidArgument("initial populations must be non-negative");
        n[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(rounded);
    }
    return n;
}

Vec to_concentrations(const std::vector<std::int64_t>& n, double volume) {
    Vec x(static_cast<Eigen::Index>(n.size()));
    for (std::size_t j = 0; j < n.size(); ++j) x[static_cast<Eigen::Index>(j)] = static_cast<double>(n[j]) / volume;
    return x;
}

void check_dims(const crn::ReactionNetwork& net, const Vec& x0) {
    if (static_cast<std::size_t>(x0.size()) != net.num_species())
        throw InvalidArgument("state dimension does not match the number of species");
}

std::int64_t draw_poisson(double mean, CounterRng& rng) {
    if (!(mean > 0.0)) return 0;
    if (!std::isfinite(mean)) throw NumericalError("tau-leap Poisson mean overflow");
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

} // namespace

Trajectory ode_solve(const crn::ReactionNetwork& net, const Vec& x0, double t_end, double dt) {
    check_dims(net, x0);
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be non-negative");
    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    Vec x = x0;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_prev = traj.times.back();
        const double t = std::min(t_end, static_cast<double>(k) * dt);
        x = rk4_step(net, x, t - t_prev);
        if ((x.array() < 0.0).any() || !x.allFinite())
            throw NumericalError("ODE state left the non-negative orthant at t = " + std::to_string(t));
        traj.times.push_back(t);
        traj.states.push_back(x);
    }
    return traj;
}

Trajectory ssa_simulate(const crn::ReactionNetwork& net, const Vec& x0, double volume, double t_end,
                        std::uint64_t seed, const SsaOptions& options) {
    check_dims(net, x0);
    auto n = to_populations(x0, volume);
    const double bound = options.blowup_bound.value_or(10.0 * x0.norm() + 10.0);
    CounterRng rng(seed, options.stream);

    const auto m = net.num_reactions();
    std::vector<double> props(2 * m);
    Trajectory traj;
    traj.volume = volume;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    double t = 0.0;
    for (;;) {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            props[2 * i] = net.propensity(i, Direction::forward, n, volume);
            props[2 * i + 1] = net.propensity(i, Direction::backward, n, volume);
            total += props[2 * i] + props[2 * i + 1];
        }
        if (!std::isfinite(total)) throw NumericalError("SSA total propensity overflow at t = " + std::to_string(t));
        if (total <= 0.0) break;
        t += -std::log(rng.uniform()) / total;
        if (t > t_end) break;
        double target = rng.uniform() * total;
        std::size_t channel = 0;
        while (channel + 1 < props.size() && target >= props[channel]) {
            target -= props[channel];
            ++channel;
        }
        // guard against round-off landing on a zero-propensity channel
        while (props[channel] <= 0.0 && channel > 0) --channel;
        const auto& nu = net.stoichiometry(channel / 2);
        const int sign = channel % 2 == 0 ? 1 : -1;
        for (std::size_t j = 0; j < n.size(); ++j) n[j] += sign * nu[j];
        Vec x = to_concentrations(n, volume);
        if (x.norm() > bound)
            throw NumericalError("SSA blow-up guard: |x| exceeded " + std::to_string(bound) + " at t = " +
                                 std::to_string(t));
        traj.times.push_back(t);
        traj.states.push_back(std::move(x));
    }
    if (traj.times.back() < t_end) {
        traj.times.push_back(t_end);
        traj.states.push_back(traj.states.back());
    }
    return traj;
}

Trajectory tau_leap_simulate(const crn::ReactionNetwork& net, const Vec& x0, double volume, double t_end, double dt,
                             std::uint64_t seed, std::uint64_t stream) {
    check_dims(net, x0);
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    auto n = to_populations(x0, volume);
    CounterRng rng(seed, stream);
    Trajectory traj;
    traj.volume = volume;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    std::vector<std::int64_t> next(n.size());
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_prev = traj.times.back();
        const double t = std::min(t_end, static_cast<double>(k) * dt);
        const double h = t - t_prev;
        next = n;
        for (std::size_t i = 0; i < net.num_reactions(); ++i) {
            const auto up = draw_poisson(net.propensity(i, Direction::forward, n, volume) * h, rng);
            const auto down = draw_poisson(net.propensity(i, Direction::backward, n, volume) * h, rng);
            const auto& nu = net.stoichiometry(i);
            for (std::size_t j = 0; j < n.size(); ++j) next[j] += nu[j] * (up - down);
        }
        bool negative = false;
        for (auto& v : next) {
            if (v < 0) {
                negative = true;
                v = 0;
            }
        }
        n = next;
        traj.times.push_back(t);
        traj.states.push_back(to_concentrations(n, volume));
        if (negative) {
            traj.absorbed = true;
            break;
        }
    }
    return traj;
}

Trajectory cle_simulate(const crn::ReactionNetwork& net, const Vec& x0, double volume, double t_end, double dt,
                        std::uint64_t seed, std::uint64_t stream) {
    check_dims(net, x0);
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(volume > 0.0)) throw InvalidArgument("volume must be positive");
    const bool deterministic = std::isinf(volume);
    const double noise_scale = deterministic ? 0.0 : 1.0 / std::sqrt(volume);
    CounterRng rng(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);

    Trajectory traj;
    if (!deterministic) traj.volume = volume;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    Vec x = x0;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_prev = traj.times.back();
        const double t = std::min(t_end, static_cast<double>(k) * dt);
        const double h = t - t_prev;
        Vec drift = Vec::Zero(x.size());
        Vec noise = Vec::Zero(x.size());
        const double sqrt_h = std::sqrt(h);
        for (std::size_t i = 0; i < net.num_reactions(); ++i) {
            double rp = net.macroscopic_rate(i, Direction::forward, x);
            double rm = net.macroscopic_rate(i, Direction::backward, x);
            const Vec nu = net.stoichiometry_vector(i);
            drift += (rp - rm) * nu;
            if (deterministic) continue;
            if (rp < 0.0) {
                rp = 0.0;
                ++traj.sqrt_truncations;
            }
            if (rm < 0.0) {
                rm = 0.0;
                ++traj.sqrt_truncations;
            }
            const double dw_plus = normal(rng) * sqrt_h;
            const double dw_minus = normal(rng) * sqrt_h;
            noise += nu * (std::sqrt(rp) * dw_plus - std::sqrt(rm) * dw_minus);
        }
        x += h * drift + noise_scale * noise;
        traj.times.push_back(t);
        traj.states.push_back(x);
    }
    return traj;
}

std::vector<Mat> forward_clt_cov(const crn::ReactionNetwork& net, const Vec& x0, std::span<const double> t_grid,
                                 double max_step) {
    check_dims(net, x0);
    if (t_grid.empty()) return {};
    if (t_grid.front() != 0.0) throw InvalidArgument("t_grid must start at 0");
    if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
    const auto n = x0.size();

    auto diffusion = [&](const Vec& x) {
        Mat b = Mat::Zero(n, n);
        for (std::size_t i = 0; i < net.num_reactions(); ++i) {
            const Vec nu = net.stoichiometry_vector(i);
            b += (net.macroscopic_rate(i, Direction::forward, x) + net.macroscopic_rate(i, Direction::backward, x)) *
                 (nu * nu.transpose());
        }
        return b;
    };
    auto sigma_rate = [&](const Vec& x, const Mat& s) {
        const Mat a = ode_jacobian(net, x);
        return Mat(a * s + s * a.transpose() + diffusion(x));
    };

    std::vector<Mat> out;
    out.reserve(t_grid.size());
    Vec x = x0;
    Mat s = Mat::Zero(n, n);
    out.push_back(s);
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double span = t_grid[k] - t_grid[k - 1];
        if (!(span >= 0.0)) throw InvalidArgument("t_grid must be non-decreasing");
        const auto sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / max_step - 1e-9)));
        const double h = span / static_cast<double>(sub);
        for (std::size_t q = 0; q < sub && h > 0.0; ++q) {
            const Vec kx1 = ode_field(net, x);
            const Mat ks1 = sigma_rate(x, s);
            const Vec x2 = x + 0.5 * h * kx1;
            const Mat s2 = s + 0.5 * h * ks1;
            const Vec kx2 = ode_field(net, x2);
            const Mat ks2 = sigma_rate(x2, s2);
            const Vec x3 = x + 0.5 * h * kx2;
            const Mat s3 = s + 0.5 * h * ks2;
            const Vec kx3 = ode_field(net, x3);
            const Mat ks3 = sigma_rate(x3, s3);
            const Vec x4 = x + h * kx3;
            const Mat s4 = s + h * ks3;
            const Vec kx4 = ode_field(net, x4);
            const Mat ks4 = sigma_rate(x4, s4);
            x += (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
            s += (h / 6.0) * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4);
            s = 0.5 * (s + s.transpose());
        }
        out.push_back(s);
    }
    return out;
}

EnsembleSummary summarize(std::span<const Trajectory> ensemble, std::span<const double> t_grid) {
    if (ensemble.empty()) throw InvalidArgument("empty ensemble");
    EnsembleSummary out;
    out.times.assign(t_grid.begin(), t_grid.end());
    const double count = static_cast<double>(ensemble.size());
    for (double t : t_grid) {
        Vec sum = Vec::Zero(ensemble.front().states.front().size());
        Vec sum_sq = sum;
        for (const auto& traj : ensemble) {
            const Vec x = traj.at(t);
            sum += x;
            sum_sq += x.cwiseProduct(x);
        }
        const Vec mean = sum / count;
        Vec var = (sum_sq - count * mean.cwiseProduct(mean)) / std::max(1.0, count - 1.0);
        out.mean.push_back(mean);
        out.variance.push_back(var.cwiseMax(0.0));
    }
    return out;
}

double sup_deviation(const Trajectory& a, const Trajectory& b, std::span<const double> t_grid) {
    double sup = 0.0;
    for (double t : t_grid) sup = std::max(sup, (a.at(t) - b.at(t)).cwiseAbs().maxCoeff());
    return sup;
}

} // namespace revpath::kinetics
