#include "revpath/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/statistics/anderson_darling.hpp>

#include "revpath/error.hpp"

namespace revpath::stats {

double mean(const std::vector<double>& v) {
    if (v.empty()) throw InvalidArgument("mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    if (v.size() < 2) throw InvalidArgument("variance needs at least two values");
    const double mu = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return acc / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("median of an empty sample");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    // Q_KS(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2)
    double p = 0.0;
    if (lambda < 0.2) {
        p = 1.0;
    } else {
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            p += (k % 2 ? 2.0 : -2.0) * term;
            if (term < 1e-16) break;
        }
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

TestResult anderson_darling_normal(std::vector<double> sample) {
    if (sample.size() < 8) throw InvalidArgument("Anderson-Darling test needs at least 8 values");
    const double mu = mean(sample);
    const double sd = std::sqrt(variance(sample));
    if (!(sd > 0.0)) throw InvalidArgument("Anderson-Darling test on a constant sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    const double a2 = boost::math::statistics::anderson_darling_normality_statistic(sample, mu, sd);
    const double s = a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
    // D'Agostino & Stephens (1986), case of estimated mean and variance.
    double p;
    if (s >= 0.6)
        p = std::exp(1.2937 - 5.709 * s + 0.0186 * s * s);
    else if (s >= 0.34)
        p = std::exp(0.9177 - 4.279 * s - 1.38 * s * s);
    else if (s >= 0.2)
        p = 1.0 - std::exp(-8.318 + 42.796 * s - 59.938 * s * s);
    else
        p = 1.0 - std::exp(-13.436 + 101.14 * s - 223.73 * s * s);
    return {s, std::clamp(p, 0.0, 1.0)};
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probabilities) {
    if (observed.size() != probabilities.size() || observed.empty())
        throw InvalidArgument("observed and probability vectors must have equal non-zero length");
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double psum = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    std::vector<double> obs;
    std::vector<double> expct;
    double o = 0.0;
    double e = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        o += observed[k];
        e += total * probabilities[k] / psum;
        if (e >= 5.0) {
            obs.push_back(o);
            expct.push_back(e);
            o = e = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (expct.empty()) throw InvalidArgument("too few expected counts for a chi-square test");
        obs.back() += o;
        expct.back() += e;
    }
    if (expct.size() < 2) throw InvalidArgument("chi-square test needs at least two pooled categories");
    double stat = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k) stat += (obs[k] - expct[k]) * (obs[k] - expct[k]) / expct[k];
    const std::size_t dof = obs.size() - 1;
    boost::math::chi_squared dist(static_cast<double>(dof));
    return {stat, boost::math::cdf(boost::math::complement(dist, stat)), dof};
}

} // namespace revpath::stats
