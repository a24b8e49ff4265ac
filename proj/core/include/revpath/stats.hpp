#pragma once

#include <cstddef>
#include <vector>

namespace revpath::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v); // unbiased
double median(std::vector<double> v);

/// Two-sample Kolmogorov-Smirnov test (asymptotic Kolmogorov distribution).
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Anderson-Darling normality test with mean and variance estimated from the
/// sample; the statistic is the small-sample corrected A*^2.
TestResult anderson_darling_normal(std::vector<double> sample);

/// Pearson chi-square goodness of fit of integer-category counts against
/// probabilities; adjacent categories are pooled until each expects >= 5.
struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};
ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probabilities);

} // namespace revpath::stats
