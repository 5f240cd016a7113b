#pragma once

#include "ivkit/data_model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(IVKIT_TEST_DATA) + "/" + name; }

// Linear IV draw with K instruments and L covariates; instruments are
// Gaussian so the design is full rank with probability one.
inline ivkit::Dataset random_iv(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k, Eigen::Index l = 0,
                                double strength = 1.0) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd z(n, k), v(n, l);
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            z(i, j) = g(rng);
            s += strength * z(i, j);
        }
        double c = 0.0;
        for (Eigen::Index j = 0; j < l; ++j) {
            v(i, j) = g(rng);
            c += 0.3 * v(i, j);
        }
        const double e = g(rng);
        const double u = 0.5 * e + g(rng);
        x(i) = s + c + u;
        y(i) = 1.0 + 2.0 * x(i) - c + e;
    }
    return ivkit::Dataset(y, x, z, v);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testing_support
