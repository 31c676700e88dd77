#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ordrisk/error.hpp"
#include "ordrisk/matrix.hpp"

namespace ordrisk {

struct LogisticOptions {
    /// L2 penalty on slopes (intercept unpenalized), on the original predictor scale.
    double ridge = 1e-6;
    /// Convergence threshold on the max-abs penalized score.
    double tol = 1e-8;
    std::size_t max_iter = 100;
};

/// |beta_j| above this after a failed fit marks the data as (quasi-)separated.
inline constexpr double separation_guard = 50.0;

struct ConvergenceRecord {
    std::size_t iterations = 0;
    /// Max-abs entry of the penalized score at the returned coefficients.
    double score_norm = 0.0;
    bool converged = false;
    bool separation = false;
    friend bool operator==(const ConvergenceRecord&, const ConvergenceRecord&) = default;
};

inline double sigmoid(double eta) noexcept {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double log1p_exp(double eta) noexcept {
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

/// Fitted binary logistic model; coefficients()[0] is the intercept.
class LogisticModel {
public:
    LogisticModel() = default;
    LogisticModel(std::vector<double> coefficients, ConvergenceRecord convergence)
        : coefficients_(std::move(coefficients)), convergence_(convergence) {}

    std::span<const double> coefficients() const noexcept { return coefficients_; }
    const ConvergenceRecord& convergence() const noexcept { return convergence_; }
    std::size_t predictor_count() const noexcept { return coefficients_.empty() ? 0 : coefficients_.size() - 1; }

    double linear_predictor(std::span<const double> x) const {
        double eta = coefficients_[0];
        for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients_[j + 1] * x[j];
        return eta;
    }

    double predict_proba(std::span<const double> x) const { return sigmoid(linear_predictor(x)); }

    friend bool operator==(const LogisticModel&, const LogisticModel&) = default;

private:
    std::vector<double> coefficients_;
    ConvergenceRecord convergence_;
};

inline double predict_proba(const LogisticModel& model, std::span<const double> x) { return model.predict_proba(x); }

/// Bernoulli log-likelihood minus (ridge/2) * ||slopes||^2; beta[0] is the intercept.
inline double penalized_log_likelihood(const RowMatrix& x, std::span<const std::uint8_t> y,
                                       std::span<const double> beta, double ridge) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double eta = beta[0];
        for (std::size_t j = 0; j < x.cols(); ++j) eta += beta[j + 1] * x(i, j);
        ll += (y[i] ? eta : 0.0) - log1p_exp(eta);
    }
    double pen = 0.0;
    for (std::size_t j = 1; j < beta.size(); ++j) pen += beta[j] * beta[j];
    return ll - 0.5 * ridge * pen;
}

/// Gradient of penalized_log_likelihood: X^T (y - p) - ridge * (0, slopes).
inline std::vector<double> penalized_score(const RowMatrix& x, std::span<const std::uint8_t> y,
                                           std::span<const double> beta, double ridge) {
    std::vector<double> g(x.cols() + 1, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double eta = beta[0];
        for (std::size_t j = 0; j < x.cols(); ++j) eta += beta[j + 1] * x(i, j);
        const double r = y[i] ? sigmoid(-eta) : -sigmoid(eta);
        g[0] += r;
        for (std::size_t j = 0; j < x.cols(); ++j) g[j + 1] += r * x(i, j);
    }
    for (std::size_t j = 1; j < g.size(); ++j) g[j] -= ridge * beta[j];
    return g;
}

/// Penalized maximum-likelihood fit by iteratively reweighted least squares.
///
/// Predictors are standardized internally (the penalty is rescaled so the
/// objective is unchanged) and the solution is mapped back to the original
/// scale. Newton steps are halved until the objective does not decrease.
/// The fit counts as converged once the max-abs score is below `tol` and the
/// Newton step has vanished; a separated likelihood keeps taking steps of
/// constant size and therefore runs into max_iter.
inline LogisticModel fit_logistic(const RowMatrix& x, std::span<const std::uint8_t> labels,
                                  const LogisticOptions& options = {}) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n == 0) throw FitError("logistic regression: no training rows");
    if (labels.size() != n) throw std::invalid_argument("fit_logistic: label count does not match row count");
    if (!(options.ridge >= 0.0)) throw std::invalid_argument("fit_logistic: ridge must be non-negative");
    for (double v : x.values())
        if (!std::isfinite(v)) throw DataError("logistic regression: non-finite predictor value");
    std::size_t positives = 0;
    for (auto l : labels) positives += l != 0;
    if (positives == 0 || positives == n) throw FitError("logistic regression: training labels are single-class");

    // Standardize; constant columns are left out (their slope is 0).
    std::vector<double> mean(p, 0.0);
    std::vector<double> sd(p, 0.0);
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) mean[j] += x(i, j);
        mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) sd[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] > 1e-12 * std::max(1.0, std::abs(mean[j]))) active.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(active.size() + 1);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), k);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    Eigen::VectorXd penalty = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        z(row, 0) = 1.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t j = active[a];
            z(row, static_cast<Eigen::Index>(a + 1)) = (x(i, j) - mean[j]) / sd[j];
        }
        y(row) = labels[i] ? 1.0 : 0.0;
    }
    for (std::size_t a = 0; a < active.size(); ++a)
        penalty(static_cast<Eigen::Index>(a + 1)) = options.ridge / (sd[active[a]] * sd[active[a]]);

    auto objective = [&](const Eigen::VectorXd& gamma) {
        const Eigen::VectorXd eta = z * gamma;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1p_exp(eta(i));
        return ll - 0.5 * gamma.cwiseProduct(gamma).dot(penalty);
    };
    auto to_original = [&](const Eigen::VectorXd& gamma) {
        std::vector<double> beta(p + 1, 0.0);
        beta[0] = gamma(0);
        for (std::size_t a = 0; a < active.size(); ++a) {
            const std::size_t j = active[a];
            beta[j + 1] = gamma(static_cast<Eigen::Index>(a + 1)) / sd[j];
            beta[0] -= beta[j + 1] * mean[j];
        }
        return beta;
    };

    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k);
    double current = objective(gamma);
    ConvergenceRecord record;
    for (std::size_t iter = 0;; ++iter) {
        const Eigen::VectorXd eta = z * gamma;
        Eigen::VectorXd resid(eta.size());
        Eigen::VectorXd w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double e = std::exp(-std::abs(eta(i)));
            // 1 - sigmoid(eta) as sigmoid(-eta): keeps saturated rows from reading as converged
            resid(i) = y(i) > 0.5 ? sigmoid(-eta(i)) : -sigmoid(eta(i));
            w(i) = e / ((1.0 + e) * (1.0 + e));
        }

        const auto beta = to_original(gamma);
        double score_norm = 0.0;
        {
            const std::vector<double> r(resid.data(), resid.data() + resid.size());
            std::vector<double> s(p + 1, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                s[0] += r[i];
                for (std::size_t j = 0; j < p; ++j) s[j + 1] += r[i] * x(i, j);
            }
            for (std::size_t j = 1; j <= p; ++j) s[j] -= options.ridge * beta[j];
            for (double v : s) score_norm = std::max(score_norm, std::abs(v));
        }
        record.iterations = iter;
        record.score_norm = score_norm;

        const Eigen::VectorXd gradient = z.transpose() * resid - penalty.cwiseProduct(gamma);
        Eigen::MatrixXd hessian = z.transpose() * w.asDiagonal() * z;
        hessian.diagonal() += penalty;
        const Eigen::VectorXd step = hessian.ldlt().solve(gradient);
        if (!step.allFinite()) break;

        const double scale = 1.0 + gamma.cwiseAbs().maxCoeff();
        if (score_norm < options.tol && step.cwiseAbs().maxCoeff() <= 1e-6 * scale) {
            record.converged = true;
            break;
        }
        if (iter == options.max_iter) break;

        double t = 1.0;
        Eigen::VectorXd candidate = gamma + step;
        double value = objective(candidate);
        for (int halvings = 0; halvings < 40 && !(value >= current - 1e-12 * std::abs(current)); ++halvings) {
            t /= 2.0;
            candidate = gamma + t * step;
            value = objective(candidate);
        }
        if (!candidate.allFinite()) break;
        gamma = candidate;
        current = value;
    }

    auto beta = to_original(gamma);
    if (!record.converged)
        record.separation = std::any_of(beta.begin(), beta.end(), [](double b) { return std::abs(b) > separation_guard; });
    return LogisticModel(std::move(beta), record);
}

} // namespace ordrisk
