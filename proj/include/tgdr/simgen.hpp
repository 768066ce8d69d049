#pragma once

#include "tgdr/dataset.hpp"
#include "tgdr/selection.hpp"
#include "tgdr/solver.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tgdr {

enum class CorrelationMode { Independent, Example2 };

// How a sample's class is drawn from its true class probabilities.
enum class LabelRule {
    // Most probable class (ties to the smaller index).
    Argmax,
    // Categorical draw.
    Categorical,
};

struct SimDesign {
    Index n_train = 100;
    Index n_test = 200;
    Index d = 100;
    CorrelationMode correlation_mode = CorrelationMode::Independent;
    LabelRule label_rule = LabelRule::Argmax;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimData {
    ExpressionDataset train;
    ExpressionDataset test;
};

// True class probabilities (classes 1, 2, 3) of the three-class simulation
// model: class 1 is the baseline, f1 drives class 2 and f2 drives class 3.
//   f1 = 0.5 - 2 X1 + 1.2 X2 + 0.8 X3
//   f2 = -1.5 + 1.7 X1 - 1.5 X2 - X4
Eigen::Vector3d simulation_class_probabilities(const Eigen::VectorXd& x);

// Unit-variance covariance with cor(X1,X5) = cor(X3,X7) = 0.8 and
// cor(X2,X6) = cor(X4,X8) = -0.8; all other pairs independent.
Eigen::MatrixXd example2_covariance(Index d);

SimData generate_example1(const SimDesign& design);
SimData generate_example2(const SimDesign& design);
SimData generate(const SimDesign& design);

struct Table1Options {
    int n_datasets = 50;
    SimDesign design;
    std::vector<double> tau_grid = CvOptions::default_tau_grid();
    int max_steps = 500;
    int folds = 5;
    int stride = 10;
    int n_bootstrap = 100;
    std::vector<double> cutoffs{0.4, 0.8};
    TgdrConfig base;
    std::uint64_t seed = 0;
    int jobs = 1;
};

inline constexpr int kTrackedFeatures = 4;

struct ReplicateResult {
    int replicate = 0;
    bool ok = false;
    std::string error;
    double tau = 0.0;
    int k = 0;
    double cv_error_pct = 0.0;
    std::array<bool, kTrackedFeatures> selected{};
    std::array<double, kTrackedFeatures> bf{};
    Index raw_size = 0;
    double raw_error_pct = 0.0;
    double raw_gbs = 0.0;
    std::vector<Index> cutoff_size;
    std::vector<double> cutoff_error_pct;
    std::vector<bool> cutoff_ok;
};

struct Table1Row {
    std::string name;
    std::array<double, kTrackedFeatures> selection_pct{};  // raw row only
    std::array<double, kTrackedFeatures> average_bf_pct{};  // raw row only
    double average_size = 0.0;
    double average_error_pct = 0.0;
    int replicates_used = 0;
};

struct Table1Summary {
    std::vector<ReplicateResult> replicates;
    std::vector<Table1Row> rows;  // raw fit, then one per cutoff
    double average_cv_error_pct = 0.0;
    std::vector<int> excluded;
};

/// Generates `n_datasets` simulated datasets and, for each, tunes (tau, k) by
/// cross-validation, fits multi-class TGDR, bags it, and refits at each
/// bagging-frequency cutoff. Aggregates selection rates and bagging
/// frequencies of X1..X4, model sizes, and test errors.
Table1Summary replicate_table1(const Table1Options& options);

void write_table1_csv(std::ostream& out, const Table1Summary& summary);
void write_table1_text(std::ostream& out, const Table1Summary& summary);
void write_replicates_csv(std::ostream& out, const Table1Summary& summary);

}  // namespace tgdr
