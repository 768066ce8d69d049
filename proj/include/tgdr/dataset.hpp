#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tgdr {

using Index = Eigen::Index;

// Per-feature centering and scaling captured from training data.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    // Constant columns get sd = 1 so they map to an all-zero column.
    static Standardization fit(const Eigen::MatrixXd& features);

    Index size() const { return mean.size(); }
    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

};

/// Samples-by-features expression matrix with class labels in 1..K (class K
/// is the reference class) and study identifiers in 1..M.
struct ExpressionDataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    std::vector<int> study_ids;
    std::vector<std::string> feature_names;
    int class_count = 2;
    int study_count = 1;

    // Display names; empty means "1".."K" / "1".."M".
    std::vector<std::string> class_names;
    std::vector<std::string> study_names;

    Index sample_count() const { return features.rows(); }
    Index feature_count() const { return features.cols(); }

    // Throws tgdr::Error when any structural invariant is broken.
    void validate() const;
    // Additionally requires every study to contain every class.
    void validate_meta() const;

    // Number of samples per class (index k-1) or per (study, class) cell.
    std::vector<Index> class_counts() const;
    std::vector<std::vector<Index>> cell_counts() const;

    ExpressionDataset subset(std::span<const Index> rows) const;
    // Rows of one study, with study ids reset to 1.
    ExpressionDataset study_slice(int study) const;
    std::vector<Index> study_rows(int study) const;

    std::string class_name(int label) const;
};

// Fills study ids (all 1 when empty), default feature names, and counts, then
// validates.
ExpressionDataset make_dataset(Eigen::MatrixXd features, std::vector<int> labels,
                               int class_count, std::vector<int> study_ids = {},
                               std::vector<std::string> feature_names = {});

}  // namespace tgdr
