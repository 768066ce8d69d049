#pragma once

#include "tgdr/dataset.hpp"
#include "tgdr/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace tgdr {

struct TgdrConfig {
    double tau = 0.5;
    double delta_v = 0.01;
    int max_steps = 1000;
    // One threshold per non-reference class; overrides `tau` when set.
    std::optional<std::vector<double>> tau_per_class;
    bool standardize = true;
    std::uint64_t seed = 0;
    double selection_tolerance = 1e-12;
    // Record a snapshot every `snapshot_stride` steps (the final step is
    // always recorded).
    int snapshot_stride = 1;
    // Features that may enter the model; empty means all.
    std::vector<bool> allowed_features;

    void validate(int class_count, Index feature_count) const;
    std::vector<double> class_taus(int class_count) const;

    bool operator==(const TgdrConfig&) const = default;
};

inline constexpr double kZeroGradientFloor = 1e-14;

struct ThresholdVector {
    Eigen::Array<bool, Eigen::Dynamic, 1> f;                           // D
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> per_class;      // (K-1) x D
};

/// Per-class rule |g_ki| >= tau_k * max_l |g_kl|, combined across classes by
/// logical or. Ties at equality pass. An all-zero block passes everywhere.
ThresholdVector threshold_vector(const Eigen::MatrixXd& gradient, double tau);
ThresholdVector threshold_vector(const Eigen::MatrixXd& gradient, const std::vector<double>& taus);

/// One masked update: beta <- beta - delta_v * g * f on the coefficient
/// blocks, plain gradient step on the intercepts. Single-study data only.
ModelCoefficients tgdr_step(const ModelCoefficients& coeffs, const ExpressionDataset& data,
                            const TgdrConfig& config);

enum class TerminalReason { MaxSteps, ZeroGradient };

struct PathStep {
    int step = 0;
    double v = 0.0;
    ModelCoefficients coeffs;
    std::vector<bool> active;
};

struct RegularizationPath {
    std::vector<PathStep> steps;
    TgdrConfig config;
    TerminalReason terminal_reason = TerminalReason::MaxSteps;

    const PathStep& final_step() const { return steps.back(); }
    const ModelCoefficients& final_coefficients() const { return steps.back().coeffs; }
    // Latest recorded snapshot with step index <= k.
    const PathStep& at_or_before(int k) const;
};

/// Single-study TGDR path for K >= 2 classes. Study identifiers in `data`
/// are ignored: all samples are treated as one study.
RegularizationPath fit_path(const ExpressionDataset& data, const TgdrConfig& config);

struct Prediction {
    std::vector<int> labels;        // 1..K
    Eigen::MatrixXd probabilities;  // n x K
};

// Argmax with ties resolved toward the smaller class index.
std::vector<int> argmax_labels(const Eigen::MatrixXd& probabilities);

Prediction predict(const ModelCoefficients& coeffs, const Eigen::MatrixXd& features,
                   const std::vector<int>& study_ids = {});

namespace detail {

// Applies a masked update in place; returns nothing and does not touch
// coefficients of features with f = 0.
void apply_update(Eigen::Ref<Eigen::VectorXd> intercept, Eigen::MatrixXd& beta,
                  const StudyGradient& gradient, const ThresholdVector& threshold,
                  double delta_v);

// Threshold with disallowed features removed from both the rule and the mask.
ThresholdVector masked_threshold(const Eigen::MatrixXd& gradient, const std::vector<double>& taus,
                                 const std::vector<bool>& allowed);

double max_abs_allowed(const Eigen::MatrixXd& gradient, const std::vector<bool>& allowed);

}  // namespace detail

}  // namespace tgdr
