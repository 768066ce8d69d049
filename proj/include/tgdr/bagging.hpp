#pragma once

#include "tgdr/dataset.hpp"
#include "tgdr/fitter.hpp"
#include "tgdr/model.hpp"
#include "tgdr/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tgdr {

struct Resample {
    ExpressionDataset data;
    std::vector<Index> rows;  // source row of each resampled sample
};

inline constexpr int kMaxResampleAttempts = 1000;

/// n draws with replacement, deterministic in (seed, replicate). Draws that
/// leave a class (or, with `by_study`, a study x class cell) empty are
/// redrawn, up to kMaxResampleAttempts times.
Resample bootstrap_resample(const ExpressionDataset& data, std::uint64_t seed,
                            std::uint64_t replicate, bool by_study = false);

struct MemberFailure {
    int replicate = 0;
    std::string message;
};

struct BaggingOptions {
    int n_bootstrap = 100;
    Fitter fitter = Fitter::Tgdr;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool keep_members = true;
};

struct BaggingReport {
    int n_bootstrap = 0;
    int n_succeeded = 0;
    Eigen::VectorXd frequencies;        // bagging frequency per feature
    std::vector<int> selection_counts;  // members selecting each feature
    std::vector<ModelCoefficients> member_models;  // indexed by replicate; empty when discarded
    std::vector<int> member_replicates;
    std::vector<MemberFailure> failures;
    std::optional<double> cutoff;
    std::optional<ModelCoefficients> final_model;
    TgdrConfig config;
    Fitter fitter = Fitter::Tgdr;
    std::uint64_t seed = 0;
};

/// Fits one model per bootstrap resample with a fixed config and records how
/// often each feature is selected. Failed members are skipped; more than 10%
/// failures aborts.
BaggingReport bagging_run(const ExpressionDataset& data, const TgdrConfig& config,
                          const BaggingOptions& options);

// Majority vote over member labels (ties to the smaller class) and mean of
// member probabilities. Requires kept members.
Prediction ensemble_predict(const BaggingReport& report, const Eigen::MatrixXd& features,
                            const std::vector<int>& study_ids = {});

struct CutoffCandidate {
    double cutoff = 0.0;
    Index kept_features = 0;
    Index model_size = 0;
    double error_pct = 0.0;
    double gbs = 0.0;
    bool skipped = false;
};

struct CutoffSelection {
    double cutoff = 0.0;
    ModelCoefficients final_model;
    std::vector<CutoffCandidate> candidates;
};

std::vector<double> default_cutoff_grid();

// Features whose bagging frequency exceeds the cutoff.
std::vector<bool> features_above(const BaggingReport& report, double cutoff);

// Refit on `data` restricted to the given features, same (tau, k).
ModelCoefficients refit_restricted(const ExpressionDataset& data, const TgdrConfig& config,
                                   Fitter fitter, const std::vector<bool>& features);

/// Refits on the full training data for every cutoff and keeps the one with
/// the lowest error, then GBS, then model size, then the larger cutoff.
/// Evaluated on `evaluation` when given, else on `data`.
CutoffSelection select_cutoff(const BaggingReport& report, const ExpressionDataset& data,
                              const std::vector<double>& cutoff_grid,
                              const ExpressionDataset* evaluation = nullptr);

}  // namespace tgdr
