#include "tgdr/meta.hpp"

#include "tgdr/error.hpp"
#include "tgdr/path_engine.hpp"

#include <algorithm>
#include <cmath>

namespace tgdr {

Eigen::MatrixXd meta_gradient(std::span<const Eigen::MatrixXd> per_study) {
    require(!per_study.empty(), ErrorCode::InvalidArgument, "no study gradients");
    Eigen::MatrixXd sum = per_study.front();
    for (std::size_t m = 1; m < per_study.size(); ++m) {
        require(per_study[m].rows() == sum.rows() && per_study[m].cols() == sum.cols(),
                ErrorCode::DimMismatch, "ragged study gradients");
        sum += per_study[m];
    }
    return sum;
}

RegularizationPath fit_meta_path(const ExpressionDataset& data, const TgdrConfig& config) {
    data.validate_meta();
    config.validate(data.class_count, data.feature_count());
    std::optional<Standardization> standardization;
    if (config.standardize) standardization = Standardization::fit(data.features);
    auto designs = detail::make_designs(data, standardization);
    return detail::run_path(designs, data.class_count, data.feature_count(), config,
                            standardization);
}

double delta_variance(double s, double mean_p, VarianceFormula formula) {
    require(s >= 0.0 && std::isfinite(s), ErrorCode::InvalidArgument,
            "residual variance must be non-negative");
    require(mean_p > 1e-12 && mean_p < 1.0 - 1e-12, ErrorCode::DegenerateStudy,
            "mean fitted probability is 0 or 1; study variance undefined");
    const double q = 1.0 - mean_p;
    if (formula == VarianceFormula::PaperLiteral) return s / (mean_p * q * q);
    return s / ((mean_p * q) * (mean_p * q));
}

double estimate_study_variance(std::span<const double> outcomes, std::span<const double> log_odds,
                               VarianceFormula formula) {
    require(outcomes.size() == log_odds.size(), ErrorCode::DimMismatch,
            "outcome and log-odds lengths differ");
    require(!outcomes.empty(), ErrorCode::DegenerateStudy, "study has no samples");
    double ss = 0.0;
    double psum = 0.0;
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
        const double z = std::clamp(log_odds[j], -kLogitClamp, kLogitClamp);
        const double p = 1.0 / (1.0 + std::exp(-z));
        ss += (outcomes[j] - p) * (outcomes[j] - p);
        psum += p;
    }
    const double n = static_cast<double>(outcomes.size());
    return delta_variance(ss / n, psum / n, formula);
}

namespace {

// Fitted log-odds for contrast k (0-based) of every sample, each with its own
// study's coefficients, on standardized features.
Eigen::VectorXd contrast_log_odds(const ModelCoefficients& coeffs, const Eigen::MatrixXd& x,
                                  const std::vector<int>& study_ids, Index k) {
    Eigen::VectorXd z(x.rows());
    for (Index j = 0; j < x.rows(); ++j) {
        const int s = coeffs.study_count() == 1 ? 0 : study_ids[static_cast<std::size_t>(j)] - 1;
        z(j) = coeffs.intercepts(s, k) + coeffs.betas[s].row(k).dot(x.row(j));
    }
    return z;
}

double contrast_variance(const ExpressionDataset& data, const Eigen::VectorXd& z, int study,
                         int contrast, VarianceFormula formula) {
    std::vector<double> y;
    std::vector<double> eta;
    for (Index j = 0; j < data.sample_count(); ++j) {
        const int label = data.labels[static_cast<std::size_t>(j)];
        if (data.study_ids[static_cast<std::size_t>(j)] != study) continue;
        if (label != contrast && label != data.class_count) continue;
        y.push_back(label == contrast ? 1.0 : 0.0);
        eta.push_back(z(j));
    }
    return estimate_study_variance(y, eta, formula);
}

}  // namespace

double estimate_study_variance(const ModelCoefficients& coeffs, const ExpressionDataset& data,
                               int study, int contrast, VarianceFormula formula) {
    coeffs.validate();
    require(coeffs.feature_count() == data.feature_count(), ErrorCode::DimMismatch,
            "model and data feature counts differ");
    require(contrast >= 1 && contrast < data.class_count, ErrorCode::InvalidArgument,
            "contrast index out of range");
    require(study >= 1 && study <= data.study_count, ErrorCode::InvalidArgument,
            "study index out of range");
    Eigen::MatrixXd x =
        coeffs.standardization ? coeffs.standardization->apply(data.features) : data.features;
    Eigen::VectorXd z = contrast_log_odds(coeffs, x, data.study_ids, contrast - 1);
    return contrast_variance(data, z, study, contrast, formula);
}

bool weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                            const Eigen::VectorXd& weights, Eigen::VectorXd& solution) {
    require(design.rows() == target.size() && design.rows() == weights.size(),
            ErrorCode::DimMismatch, "weighted least squares dimension mismatch");
    Eigen::VectorXd root = weights.cwiseSqrt();
    Eigen::MatrixXd a = root.asDiagonal() * design;
    Eigen::VectorXd b = root.cwiseProduct(target);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    solution = cod.solve(b);
    return cod.rank() < design.cols();
}

PooledModel pool_coefficients(const ModelCoefficients& per_study, const ExpressionDataset& data,
                              const PoolingOptions& options) {
    per_study.validate();
    data.validate();
    require(per_study.feature_count() == data.feature_count(), ErrorCode::DimMismatch,
            "model and data feature counts differ");
    require(per_study.class_count() == data.class_count, ErrorCode::DimMismatch,
            "model and data class counts differ");
    require(per_study.study_count() == data.study_count, ErrorCode::DimMismatch,
            "pooling needs one coefficient block per study");

    const int km1 = data.class_count - 1;
    const int studies = data.study_count;
    const Index n = data.sample_count();
    Eigen::MatrixXd x =
        per_study.standardization ? per_study.standardization->apply(data.features) : data.features;

    std::vector<Index> active;
    {
        auto mask = per_study.active_set(options.selection_tolerance);
        for (Index j = 0; j < data.feature_count(); ++j)
            if (mask[static_cast<std::size_t>(j)]) active.push_back(j);
    }
    Eigen::MatrixXd design(n, static_cast<Index>(active.size()) + 1);
    design.col(0).setOnes();
    for (std::size_t a = 0; a < active.size(); ++a) design.col(static_cast<Index>(a) + 1) = x.col(active[a]);

    PooledModel pooled;
    pooled.source = per_study;
    pooled.formula = options.formula;
    pooled.sigma2.resize(km1, studies);
    pooled.overall = ModelCoefficients::zeros(1, data.class_count, data.feature_count());
    pooled.overall.standardization = per_study.standardization;

    for (int k = 0; k < km1; ++k) {
        Eigen::VectorXd z = contrast_log_odds(per_study, x, data.study_ids, k);
        for (int m = 1; m <= studies; ++m)
            pooled.sigma2(k, m - 1) = contrast_variance(data, z, m, k + 1, options.formula);

        Eigen::VectorXd study_weight(studies);
        const double max_s2 = pooled.sigma2.row(k).maxCoeff();
        if (max_s2 <= 0.0) {
            study_weight.setOnes();
            pooled.uniform_weights = true;
            pooled.warnings.push_back("contrast " + std::to_string(k + 1) +
                                      ": all study variances are zero; using uniform weights");
        } else {
            // A zero-variance study is floored so that it dominates without
            // producing an infinite weight.
            const double floor = 1e-12 * max_s2;
            for (int m = 0; m < studies; ++m)
                study_weight(m) = 1.0 / std::max(pooled.sigma2(k, m), floor);
        }
        Eigen::VectorXd w(n);
        for (Index j = 0; j < n; ++j) w(j) = study_weight(data.study_ids[static_cast<std::size_t>(j)] - 1);

        Eigen::VectorXd mu;
        if (weighted_least_squares(design, z, w, mu)) {
            pooled.underdetermined = true;
            pooled.warnings.push_back("contrast " + std::to_string(k + 1) +
                                      ": rank-deficient pooling design; minimum-norm solution");
        }
        pooled.overall.intercepts(0, k) = mu(0);
        for (std::size_t a = 0; a < active.size(); ++a)
            pooled.overall.betas[0](k, active[a]) = mu(static_cast<Index>(a) + 1);
    }
    pooled.overall.validate();
    return pooled;
}

Prediction predict_new_study(const PooledModel& pooled, const Eigen::MatrixXd& features) {
    return predict(pooled.overall, features);
}

}  // namespace tgdr
