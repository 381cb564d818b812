#pragma once

#include <span>
#include <vector>

namespace onestep {

struct Summary {
    double mean = 0.0;
    double std = 0.0;      // sample standard deviation (n-1)
    double std_err = 0.0;  // std / sqrt(n)
    double median = 0.0;
    std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

double median(std::vector<double> values);

// Summary of a[i] - b[i]: the std-err is that of the paired differences.
Summary paired_difference(std::span<const double> a, std::span<const double> b);

// Least-squares slope of log(y) on log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace onestep
