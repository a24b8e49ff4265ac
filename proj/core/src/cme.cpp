#include "revpath/cme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "revpath/error.hpp"
#include "revpath/parallel.hpp"

namespace revpath::cme {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void check_mean(double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("Poisson means must be finite and non-negative");
}

// Poisson law truncated to terms within `cutoff` of its peak.
struct PoissonRow {
    std::int64_t first = 0;
    std::vector<double> pmf;
};

PoissonRow poisson_row(double mu, double cutoff) {
    if (mu == 0.0) return {0, {1.0}};
    const auto mode = static_cast<std::int64_t>(std::floor(mu));
    const double peak = log_poisson(mode, mu);
    const double floor_log = peak + std::log(cutoff);
    std::int64_t lo = mode;
    while (lo > 0 && log_poisson(lo - 1, mu) >= floor_log) --lo;
    std::int64_t hi = mode;
    while (log_poisson(hi + 1, mu) >= floor_log) ++hi;
    PoissonRow row{lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1))};
    for (std::int64_t j = lo; j <= hi; ++j) row.pmf[static_cast<std::size_t>(j - lo)] = std::exp(log_poisson(j, mu));
    return row;
}

} // namespace

double log_poisson(std::int64_t k, double mu) {
    if (k < 0) return neg_inf;
    if (mu == 0.0) return k == 0 ? 0.0 : neg_inf;
    return static_cast<double>(k) * std::log(mu) - mu - std::lgamma(static_cast<double>(k) + 1.0);
}

double skellam_pmf(std::int64_t k, double mu1, double mu2) {
    check_mean(mu1);
    check_mean(mu2);
    if (mu2 == 0.0) return std::exp(log_poisson(k, mu1));
    if (mu1 == 0.0) return std::exp(log_poisson(-k, mu2));

    // Terms Pois(j; mu1) Pois(j - k; mu2) are unimodal in j; start near the
    // mode and sum outward until they drop below 1e-18 of the running total.
    const std::int64_t j_lo = std::max<std::int64_t>(0, k);
    const double kd = static_cast<double>(k);
    const double j_mode = 0.5 * (kd + std::sqrt(kd * kd + 4.0 * mu1 * mu2)) - 1.0;
    const std::int64_t j0 = std::max(j_lo, static_cast<std::int64_t>(std::floor(j_mode)));
    auto log_term = [&](std::int64_t j) { return log_poisson(j, mu1) + log_poisson(j - k, mu2); };
    const double ref = log_term(j0);
    if (ref == neg_inf) return 0.0;

    constexpr double cutoff = 1e-18;
    double sum = 1.0;
    for (std::int64_t j = j0 + 1;; ++j) {
        const double t = std::exp(log_term(j) - ref);
        sum += t;
        if (t < cutoff * sum) break;
    }
    for (std::int64_t j = j0 - 1; j >= j_lo; --j) {
        const double t = std::exp(log_term(j) - ref);
        sum += t;
        if (t < cutoff * sum) break;
    }
    return std::exp(ref + std::log(sum));
}

SkellamRow skellam_distribution(double mu1, double mu2, double cutoff) {
    check_mean(mu1);
    check_mean(mu2);
    const PoissonRow a = poisson_row(mu1, cutoff);
    const PoissonRow b = poisson_row(mu2, cutoff);
    const auto na = static_cast<std::int64_t>(a.pmf.size());
    const auto nb = static_cast<std::int64_t>(b.pmf.size());
    SkellamRow out;
    out.k_min = a.first - (b.first + nb - 1);
    out.pmf.assign(static_cast<std::size_t>(na + nb - 1), 0.0);
    // k = j1 - j2; offset index = (j1 - a.first) + (b.first + nb - 1 - j2)
    for (std::int64_t u = 0; u < na; ++u)
        for (std::int64_t v = 0; v < nb; ++v)
            out.pmf[static_cast<std::size_t>(u + nb - 1 - v)] +=
                a.pmf[static_cast<std::size_t>(u)] * b.pmf[static_cast<std::size_t>(v)];
    return out;
}

// -- LatticeDomain ---------------------------------------------------------------------

LatticeDomain::LatticeDomain(double x_l, double x_r, double volume, int nu)
    : x_l_(x_l), x_r_(x_r), volume_(volume), nu_(nu) {
    if (!(volume > 0.0) || !std::isfinite(volume)) throw InvalidArgument("volume must be positive and finite");
    if (nu < 1) throw InvalidArgument("lattice step must be a positive integer");
    if (!(x_l < x_r)) throw InvalidArgument("domain requires x_l < x_r");
    // The small offset absorbs round-off in products like 0.2 * 150.
    base_ = static_cast<std::int64_t>(std::floor(x_l * volume / nu + 1e-9));
    const double cells = std::floor((x_r - x_l) * volume / nu + 1e-9);
    if (cells < 2.0) throw InvalidArgument("domain holds fewer than 2 lattice cells");
    nx_ = static_cast<std::size_t>(cells);
    if (base_ + 1 < 0) throw InvalidArgument("domain extends below zero population");
}

LatticeDomain LatticeDomain::from_cells(std::int64_t k_first, std::int64_t k_last, double volume, int nu) {
    if (k_first < 0 || k_last <= k_first) throw InvalidArgument("from_cells requires 0 <= k_first < k_last");
    const double h = nu / volume;
    LatticeDomain dom((static_cast<double>(k_first) - 0.5) * h, (static_cast<double>(k_last) + 0.5) * h, volume, nu);
    dom.base_ = k_first - 1;
    dom.nx_ = static_cast<std::size_t>(k_last - k_first + 1);
    return dom;
}

std::vector<double> LatticeDomain::cells() const {
    std::vector<double> out(nx_);
    for (std::size_t i = 0; i < nx_; ++i) out[i] = x(i);
    return out;
}

std::optional<std::size_t> LatticeDomain::index_of_population(std::int64_t n) const {
    if (n % nu_ != 0) return std::nullopt;
    const std::int64_t i = n / nu_ - base_ - 1;
    if (i < 0 || i >= static_cast<std::int64_t>(nx_)) return std::nullopt;
    return static_cast<std::size_t>(i);
}

// -- TransitionKernel ------------------------------------------------------------------

Vec TransitionKernel::apply_left(const Vec& p) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (p.size() != n) throw InvalidArgument("vector length does not match the kernel");
    const auto abs = n - 1;
    Vec out = Vec::Zero(n);
    for (Eigen::Index i = 0; i < abs; ++i) {
        const double pi = p[i];
        if (pi == 0.0) continue;
        const auto ui = static_cast<std::size_t>(i);
        const double* row = P.data() + i * n;
        for (std::size_t j = band_lo[ui]; j <= band_hi[ui] && band_lo[ui] <= band_hi[ui]; ++j)
            out[static_cast<Eigen::Index>(j)] += pi * row[j];
        out[abs] += pi * row[abs];
    }
    out[abs] += p[abs];
    return out;
}

Vec TransitionKernel::apply_right(const Vec& r) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (r.size() != n) throw InvalidArgument("vector length does not match the kernel");
    const auto abs = n - 1;
    Vec out(n);
    for (Eigen::Index i = 0; i < abs; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double* row = P.data() + i * n;
        double acc = row[abs] * r[abs];
        for (std::size_t j = band_lo[ui]; j <= band_hi[ui] && band_lo[ui] <= band_hi[ui]; ++j)
            acc += row[j] * r[static_cast<Eigen::Index>(j)];
        out[i] = acc;
    }
    out[abs] = r[abs];
    return out;
}

double TransitionKernel::max_row_defect() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < P.rows(); ++i) worst = std::max(worst, std::abs(P.row(i).sum() - 1.0));
    return worst;
}

TransitionKernel identity_kernel(const LatticeDomain& dom, double dt) {
    TransitionKernel k;
    const auto n = static_cast<Eigen::Index>(dom.size());
    k.P = RowMat::Identity(n, n);
    k.dt = dt;
    k.volume = dom.volume();
    k.band_lo.resize(dom.interior());
    k.band_hi.resize(dom.interior());
    for (std::size_t i = 0; i < dom.interior(); ++i) k.band_lo[i] = k.band_hi[i] = i;
    return k;
}

TransitionKernel build_kernel(const crn::ReactionNetwork& net, const LatticeDomain& dom, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    const crn::ScalarChain chain(net);
    if (dom.nu() != chain.lattice_step())
        throw InvalidArgument("domain lattice step " + std::to_string(dom.nu()) + " does not match the network's " +
                              std::to_string(chain.lattice_step()));

    const std::size_t nx = dom.interior();
    const auto n = static_cast<Eigen::Index>(dom.size());
    TransitionKernel k;
    k.P = RowMat::Zero(n, n);
    k.dt = dt;
    k.volume = dom.volume();
    k.network = net.serialize();
    k.band_lo.assign(nx, 1);
    k.band_hi.assign(nx, 0);
    const double volume = dom.volume();

    parallel_for(nx, [&](std::size_t i) {
        const std::int64_t pop = dom.population(i);
        // Law of the jump in lattice units, convolved over jump sizes.
        SkellamRow law{0, {1.0}};
        for (std::size_t g = 0; g < chain.num_groups(); ++g) {
            const double up = chain.up_propensity(g, pop, volume);
            const double down = chain.down_propensity(g, pop, volume);
            if (!(up >= 0.0) || !(down >= 0.0) || !std::isfinite(up) || !std::isfinite(down))
                throw InvalidArgument("negative or non-finite propensity at population " + std::to_string(pop));
            const SkellamRow part = skellam_distribution(up * dt, down * dt);
            const std::int64_t m = chain.jump_multiples()[g];
            SkellamRow next;
            next.k_min = law.k_min + m * part.k_min;
            const auto span = static_cast<std::int64_t>(law.pmf.size()) - 1 +
                              m * (static_cast<std::int64_t>(part.pmf.size()) - 1);
            next.pmf.assign(static_cast<std::size_t>(span + 1), 0.0);
            for (std::size_t u = 0; u < law.pmf.size(); ++u)
                for (std::size_t v = 0; v < part.pmf.size(); ++v)
                    next.pmf[u + static_cast<std::size_t>(m) * v] += law.pmf[u] * part.pmf[v];
            law = std::move(next);
        }
        double* row = k.P.data() + static_cast<Eigen::Index>(i) * n;
        double interior_mass = 0.0;
        for (std::size_t u = 0; u < law.pmf.size(); ++u) {
            const std::int64_t j = static_cast<std::int64_t>(i) + law.k_min + static_cast<std::int64_t>(u);
            if (j < 0 || j >= static_cast<std::int64_t>(nx) || law.pmf[u] == 0.0) continue;
            const auto uj = static_cast<std::size_t>(j);
            row[uj] = law.pmf[u];
            interior_mass += law.pmf[u];
            if (k.band_lo[i] > k.band_hi[i]) {
                k.band_lo[i] = k.band_hi[i] = uj;
            } else {
                k.band_lo[i] = std::min(k.band_lo[i], uj);
                k.band_hi[i] = std::max(k.band_hi[i], uj);
            }
        }
        row[nx] = std::max(0.0, 1.0 - interior_mass);
    });
    k.P(n - 1, n - 1) = 1.0;
    return k;
}

// -- ProbabilityField ------------------------------------------------------------------

double ProbabilityField::mean(std::size_t m) const {
    const Vec& p = slices.at(m);
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        mass += p[static_cast<Eigen::Index>(i)];
        acc += p[static_cast<Eigen::Index>(i)] * cells[i];
    }
    return mass > 0.0 ? acc / mass : std::numeric_limits<double>::quiet_NaN();
}

double ProbabilityField::variance(std::size_t m) const {
    const double mu = mean(m);
    const Vec& p = slices.at(m);
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        mass += p[static_cast<Eigen::Index>(i)];
        acc += p[static_cast<Eigen::Index>(i)] * (cells[i] - mu) * (cells[i] - mu);
    }
    return mass > 0.0 ? acc / mass : std::numeric_limits<double>::quiet_NaN();
}

Vec point_mass(const LatticeDomain& dom, std::size_t i) {
    if (i >= dom.size()) throw InvalidArgument("cell index out of range");
    Vec p = Vec::Zero(static_cast<Eigen::Index>(dom.size()));
    p[static_cast<Eigen::Index>(i)] = 1.0;
    return p;
}

ProbabilityField forward_evolve(const TransitionKernel& kernel, const LatticeDomain& dom, const Vec& init,
                                 std::size_t Nt) {
    if (kernel.size() != dom.size() || static_cast<std::size_t>(init.size()) != dom.size())
        throw InvalidArgument("kernel, domain and initial slice sizes differ");
    if ((init.array() < 0.0).any()) throw InvalidArgument("initial slice has negative entries");
    if (std::abs(init.sum() - 1.0) > 1e-9) throw InvalidArgument("initial slice does not sum to 1");

    ProbabilityField field;
    field.cells = dom.cells();
    field.dt = kernel.dt;
    field.slices.reserve(Nt + 1);
    field.slices.push_back(init);
    field.defect.push_back(std::abs(init.sum() - 1.0));
    for (std::size_t m = 0; m < Nt; ++m) {
        Vec next = kernel.apply_left(field.slices.back());
        const double defect = std::abs(next.sum() - 1.0);
        if (defect > 1e-9)
            throw NumericalError("normalization drift " + std::to_string(defect) + " at step " + std::to_string(m + 1));
        field.slices.push_back(std::move(next));
        field.defect.push_back(defect);
    }
    return field;
}

Vec stationary_distribution(const crn::ReactionNetwork& net, const LatticeDomain& dom) {
    const crn::ScalarChain chain(net);
    if (dom.nu() != chain.lattice_step()) throw InvalidArgument("domain lattice step does not match the network");
    const std::size_t nx = dom.interior();
    const double volume = dom.volume();
    Vec pi = Vec::Zero(static_cast<Eigen::Index>(dom.size()));

    if (chain.is_birth_death()) {
        std::vector<double> logp(nx, 0.0);
        for (std::size_t i = 1; i < nx; ++i) {
            const double up = chain.up_propensity(0, dom.population(i - 1), volume);
            const double down = chain.down_propensity(0, dom.population(i), volume);
            if (!(down > 0.0))
                throw InvalidArgument("zero backward rate on interior cell x = " + std::to_string(dom.x(i)));
            logp[i] = up > 0.0 ? logp[i - 1] + std::log(up) - std::log(down) : neg_inf;
        }
        const double top = *std::max_element(logp.begin(), logp.end());
        double total = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            pi[static_cast<Eigen::Index>(i)] = std::exp(logp[i] - top);
            total += pi[static_cast<Eigen::Index>(i)];
        }
        pi /= total;
        return pi;
    }

    double max_rate = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        double total = 0.0;
        for (std::size_t g = 0; g < chain.num_groups(); ++g)
            total += chain.up_propensity(g, dom.population(i), volume) +
                     chain.down_propensity(g, dom.population(i), volume);
        max_rate = std::max(max_rate, total);
    }
    if (!(max_rate > 0.0)) throw InvalidArgument("all propensities vanish on the domain");
    const TransitionKernel k = build_kernel(net, dom, 0.1 / max_rate);
    const auto abs = static_cast<Eigen::Index>(nx);
    pi.head(abs).setConstant(1.0 / static_cast<double>(nx));
    for (std::size_t iter = 0; iter < 10'000'000; ++iter) {
        Vec next = k.apply_left(pi);
        next[abs] = 0.0;
        const double mass = next.sum();
        if (!(mass > 0.0)) throw NumericalError("power iteration lost all mass");
        next /= mass;
        const double change = (next - pi).lpNorm<1>();
        pi = std::move(next);
        if (change <= 1e-12) return pi;
    }
    throw NumericalError("stationary power iteration did not converge");
}

void write_kernel_csv(std::ostream& out, const TransitionKernel& kernel) {
    char buf[32];
    for (Eigen::Index i = 0; i < kernel.P.rows(); ++i) {
        for (Eigen::Index j = 0; j < kernel.P.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", kernel.P(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

} // namespace revpath::cme
