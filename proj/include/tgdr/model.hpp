#pragma once

#include "tgdr/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace tgdr {

// Multinomial-logit coefficients with class K as reference. One row of
// intercepts and one (K-1) x D block of gene coefficients per study; a
// single-study model has exactly one of each.
struct ModelCoefficients {
    Eigen::MatrixXd intercepts;          // studies x (K-1)
    std::vector<Eigen::MatrixXd> betas;  // per study, (K-1) x D
    std::optional<Standardization> standardization;

    static ModelCoefficients zeros(int studies, int class_count, Index features);

    int study_count() const { return static_cast<int>(betas.size()); }
    int class_count() const { return static_cast<int>(intercepts.cols()) + 1; }
    Index feature_count() const { return betas.empty() ? 0 : betas.front().cols(); }

    // Features with any |coefficient| > tolerance in any study or class block.
    std::vector<bool> active_set(double tolerance) const;
    Index active_count(double tolerance) const;

    // Throws on ragged blocks or non-finite entries.
    void validate() const;

};

// Coefficient gradients for one study: length K-1 intercept part plus a
// (K-1) x D block.
struct StudyGradient {
    Eigen::VectorXd intercept;
    Eigen::MatrixXd coef;
};

inline constexpr double kLogitClamp = 700.0;

/// Posterior class-membership probabilities for one sample.
///
/// Applies the model's standardization to `x` first, then evaluates the
/// softmax with the reference logit fixed at zero. The maximum logit is
/// subtracted before exponentiation, so saturated models do not overflow.
Eigen::VectorXd class_probabilities(const ModelCoefficients& coeffs, const Eigen::VectorXd& x,
                                    int study = 1);

// Probabilities for many samples at once; `study_ids` empty means study 1.
Eigen::MatrixXd class_probabilities(const ModelCoefficients& coeffs,
                                    const Eigen::MatrixXd& features,
                                    const std::vector<int>& study_ids = {});

/// Multinomial log-likelihood summed over samples (and over studies, each
/// study using its own coefficient block).
double log_likelihood(const ModelCoefficients& coeffs, const ExpressionDataset& data);

/// Negative gradient -dR/dbeta per study, as raw sums over samples.
std::vector<StudyGradient> negative_gradient(const ModelCoefficients& coeffs,
                                             const ExpressionDataset& data);

namespace detail {

// Prepared design for one study: standardized features and the one-hot
// indicator matrix of the non-reference classes.
struct StudyDesign {
    Eigen::MatrixXd x;  // n x D
    Eigen::MatrixXd y;  // n x (K-1)
    std::vector<int> labels;
};

StudyDesign make_design(const Eigen::MatrixXd& standardized, const std::vector<int>& labels,
                        int class_count);

// Per-study designs; sample order within a study follows the dataset.
std::vector<StudyDesign> make_designs(const ExpressionDataset& data,
                                      const std::optional<Standardization>& standardization);

// Row-wise softmax probabilities (n x K) from non-reference logits (n x (K-1)).
Eigen::MatrixXd softmax_from_logits(const Eigen::MatrixXd& logits);

// n x (K-1) linear predictors with clamping.
Eigen::MatrixXd logits(const Eigen::MatrixXd& x, const Eigen::VectorXd& intercept,
                       const Eigen::MatrixXd& beta);

struct Evaluation {
    double log_likelihood = 0.0;
    StudyGradient gradient;
};

Evaluation evaluate_study(const StudyDesign& design, const Eigen::VectorXd& intercept,
                          const Eigen::MatrixXd& beta);

}  // namespace detail

}  // namespace tgdr
