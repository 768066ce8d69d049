#pragma once

#include "tgdr/dataset.hpp"
#include "tgdr/model.hpp"
#include "tgdr/solver.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace tgdr {

// Elementwise sum of per-study (K-1) x D coefficient gradients.
Eigen::MatrixXd meta_gradient(std::span<const Eigen::MatrixXd> per_study);

/// Meta-TGDR path: one threshold per step from the summed gradient, shared
/// across studies, while each study's block moves along its own gradient.
/// Every study must contain every class. Standardization (when enabled) is
/// estimated on all studies together.
RegularizationPath fit_meta_path(const ExpressionDataset& data, const TgdrConfig& config);

enum class VarianceFormula {
    // S / (p(1-p))^2, the delta-method variance of the logit.
    Delta,
    // S / (p (1-p)^2), as printed in the original method description.
    PaperLiteral,
};

// Logit-scale variance from the natural-scale mean squared residual `s` and
// the mean fitted probability `mean_p`.
double delta_variance(double s, double mean_p, VarianceFormula formula = VarianceFormula::Delta);

// sigma^2 from binary outcomes (0/1) and fitted log-odds of one study.
double estimate_study_variance(std::span<const double> outcomes, std::span<const double> log_odds,
                               VarianceFormula formula = VarianceFormula::Delta);

// sigma^2 of study `study` for contrast `contrast` (1..K-1), using the
// samples of that study in class `contrast` or the reference class.
double estimate_study_variance(const ModelCoefficients& coeffs, const ExpressionDataset& data,
                               int study, int contrast,
                               VarianceFormula formula = VarianceFormula::Delta);

struct PooledModel {
    // Overall coefficients mu, stored as a single-study model so that it
    // predicts through the ordinary softmax path.
    ModelCoefficients overall;
    Eigen::MatrixXd sigma2;  // (K-1) x M
    ModelCoefficients source;
    VarianceFormula formula = VarianceFormula::Delta;
    bool underdetermined = false;
    bool uniform_weights = false;
    std::vector<std::string> warnings;
};

struct PoolingOptions {
    VarianceFormula formula = VarianceFormula::Delta;
    double selection_tolerance = 1e-12;
};

/// Fixed-effect pooling of study-specific coefficients: the fitted log-odds
/// of every training sample are regressed on the shared active features by
/// weighted least squares with weight 1/sigma_i^2 for study i, separately
/// for each class contrast.
PooledModel pool_coefficients(const ModelCoefficients& per_study, const ExpressionDataset& data,
                              const PoolingOptions& options = {});

// Weighted least squares of `target` on `design` with per-row weights;
// minimum-norm when rank deficient. Returns whether the system was rank
// deficient.
bool weighted_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                            const Eigen::VectorXd& weights, Eigen::VectorXd& solution);

Prediction predict_new_study(const PooledModel& pooled, const Eigen::MatrixXd& features);

}  // namespace tgdr
