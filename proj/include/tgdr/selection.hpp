#pragma once

#include "tgdr/dataset.hpp"
#include "tgdr/fitter.hpp"
#include "tgdr/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tgdr {

/// Generalized Brier score normalized by sample size:
/// sum_i sum_k (Y_ik - p_ik)^2 / (2n). Lies in [0, 1]; smaller is better.
/// Every probability row must sum to 1 within 1e-9.
double gbs(const Eigen::MatrixXd& probabilities, std::span<const int> labels);

// Percentage of mismatched labels.
double misclassification_error(std::span<const int> predicted, std::span<const int> truth);

struct EvaluationReport {
    double error_pct = 0.0;
    double gbs = 0.0;
    Eigen::MatrixXi confusion;  // rows: true class, columns: predicted class
    Index n = 0;
};

EvaluationReport evaluate(const Eigen::MatrixXd& probabilities, std::span<const int> labels);

// Fold ids in 0..folds-1. Stratified assignment shuffles each class (or
// study x class cell) and deals samples round-robin with a counter that
// carries across strata, so fold sizes differ by at most one.
std::vector<int> assign_folds(const ExpressionDataset& data, int folds, std::uint64_t seed,
                              bool stratified = true, bool by_study = false);

struct CvGridPoint {
    double tau = 0.0;
    int k = 0;
    double error_pct = 0.0;
    double gbs = 0.0;
};

struct CvOptions {
    std::vector<double> tau_grid = default_tau_grid();
    int max_steps = 1000;
    int folds = 5;
    int stride = 10;
    std::uint64_t seed = 0;
    Fitter fitter = Fitter::Tgdr;
    bool stratified = true;
    int jobs = 1;
    // delta_v, standardize, selection_tolerance and per-class settings are
    // taken from here; tau, max_steps and stride are overridden per grid point.
    TgdrConfig base;

    static std::vector<double> default_tau_grid();
};

struct CvResult {
    std::vector<CvGridPoint> grid;  // ordered by tau, then k
    CvGridPoint best;
    double min_error_pct = 0.0;
    int folds = 0;
    std::vector<int> fold_assignment;
    std::uint64_t seed = 0;
    // Out-of-fold predictions at the selected grid point.
    std::vector<int> best_labels;
    Eigen::MatrixXd best_probabilities;

    TgdrConfig best_config(const TgdrConfig& base) const;
};

// Called once per (fold, tau) fit with the training and test row indices.
using FoldObserver =
    std::function<void(int fold, std::span<const Index> train, std::span<const Index> test)>;

/// Cross-validated tuning of (tau, k). One path is fit per (tau, fold); k is
/// read off the path at every `stride`-th step. The best point minimizes the
/// pooled out-of-fold error, then GBS, then k, then tau.
CvResult k_fold_cv(const ExpressionDataset& data, const CvOptions& options,
                   const FoldObserver& observer = {});

// k values evaluated by k_fold_cv.
std::vector<int> cv_step_grid(int max_steps, int stride);

}  // namespace tgdr
