#pragma once

// Ordinary least squares with an unpenalized intercept, plus the error metrics
// used to score forecasts.

#include "farmintel/common.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace farmintel::ols {

struct Fit {
    std::vector<double> coefficients;
    double intercept = 0.0;
    std::size_t rank = 0;
    bool rank_deficient = false;

    double predict(std::span<const double> row) const
    {
        if (row.size() != coefficients.size())
            throw ValidationError("feature row has " + std::to_string(row.size()) + " values, model expects " +
                                  std::to_string(coefficients.size()));
        double y = intercept;
        for (std::size_t i = 0; i < row.size(); ++i) y += coefficients[i] * row[i];
        return y;
    }
};

/// Least-squares fit of `targets ~ rows * beta + intercept`.
///
/// Columns are centered first so the intercept is not shrunk. Rank-deficient
/// designs get the minimum-norm coefficient vector (pseudo-inverse semantics)
/// and `rank_deficient` is set.
inline Fit fit(const std::vector<std::vector<double>>& rows, std::span<const double> targets)
{
    if (rows.empty()) throw ValidationError("OLS needs at least one row");
    if (rows.size() != targets.size())
        throw ValidationError("OLS: " + std::to_string(rows.size()) + " rows but " + std::to_string(targets.size()) +
                              " targets");
    const std::size_t n = rows.size();
    const std::size_t p = rows.front().size();
    if (n < p) throw ValidationError("OLS needs at least as many rows as columns");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != p) throw ValidationError("OLS: ragged feature matrix at row " + std::to_string(i));
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(rows[i][j])) throw ValidationError("OLS: non-finite feature at row " + std::to_string(i));
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        if (!std::isfinite(targets[i])) throw ValidationError("OLS: non-finite target at row " + std::to_string(i));
        y[static_cast<Eigen::Index>(i)] = targets[i];
    }

    Fit out;
    const Eigen::RowVectorXd col_mean = x.colwise().mean();
    const double y_mean = y.mean();
    if (p == 0) {
        out.intercept = y_mean;
        return out;
    }
    const Eigen::MatrixXd xc = x.rowwise() - col_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xc);
    const Eigen::VectorXd beta = cod.solve(yc);
    out.rank = static_cast<std::size_t>(cod.rank());
    out.rank_deficient = out.rank < p;
    out.coefficients.assign(beta.data(), beta.data() + beta.size());
    out.intercept = y_mean - col_mean.dot(beta);
    return out;
}

inline void check_pair(std::span<const double> predicted, std::span<const double> actual)
{
    if (predicted.size() != actual.size())
        throw ValidationError("length mismatch: " + std::to_string(predicted.size()) + " predictions vs " +
                              std::to_string(actual.size()) + " actuals");
    if (predicted.empty()) throw ValidationError("error metric needs at least one value");
}

inline double rmse(std::span<const double> predicted, std::span<const double> actual)
{
    check_pair(predicted, actual);
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(predicted.size()));
}

inline double mae(std::span<const double> predicted, std::span<const double> actual)
{
    check_pair(predicted, actual);
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) s += std::abs(predicted[i] - actual[i]);
    return s / static_cast<double>(predicted.size());
}

}  // namespace farmintel::ols
