#include "tgdr/dataset.hpp"

#include "tgdr/error.hpp"

#include <cmath>
#include <set>

namespace tgdr {

Standardization Standardization::fit(const Eigen::MatrixXd& features) {
    const Index n = features.rows();
    require(n >= 1, ErrorCode::InvalidArgument, "cannot standardize an empty matrix");
    Standardization s;
    s.mean = features.colwise().mean().transpose();
    s.sd.resize(features.cols());
    for (Index j = 0; j < features.cols(); ++j) {
        double ss = (features.col(j).array() - s.mean(j)).square().sum();
        double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        s.sd(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& features) const {
    require(features.cols() == size(), ErrorCode::DimMismatch,
            "standardization expects " + std::to_string(size()) + " features, got " +
                std::to_string(features.cols()));
    return ((features.rowwise() - mean.transpose()).array().rowwise() /
            sd.transpose().array())
        .matrix();
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& x) const {
    require(x.size() == size(), ErrorCode::DimMismatch,
            "standardization expects " + std::to_string(size()) + " features, got " +
                std::to_string(x.size()));
    return ((x - mean).array() / sd.array()).matrix();
}

void ExpressionDataset::validate() const {
    const Index n = sample_count();
    require(n >= 1, ErrorCode::InvalidArgument, "dataset has no samples");
    require(feature_count() >= 1, ErrorCode::InvalidArgument, "dataset has no features");
    require(class_count >= 2, ErrorCode::InvalidArgument, "need at least two classes");
    require(study_count >= 1, ErrorCode::InvalidArgument, "need at least one study");
    require(static_cast<Index>(labels.size()) == n, ErrorCode::DimMismatch,
            "label count does not match sample count");
    require(static_cast<Index>(study_ids.size()) == n, ErrorCode::DimMismatch,
            "study id count does not match sample count");
    require(static_cast<Index>(feature_names.size()) == feature_count(), ErrorCode::DimMismatch,
            "feature name count does not match feature count");
    for (Index i = 0; i < n; ++i) {
        require(labels[i] >= 1 && labels[i] <= class_count, ErrorCode::InvalidArgument,
                "label out of range at sample " + std::to_string(i));
        require(study_ids[i] >= 1 && study_ids[i] <= study_count, ErrorCode::InvalidArgument,
                "study id out of range at sample " + std::to_string(i));
    }
    require(features.allFinite(), ErrorCode::NonFinite, "features contain non-finite values");
}

void ExpressionDataset::validate_meta() const {
    validate();
    auto cells = cell_counts();
    for (int m = 0; m < study_count; ++m)
        for (int k = 0; k < class_count; ++k)
            require(cells[m][k] > 0, ErrorCode::MissingClass,
                    "study " + std::to_string(m + 1) + " has no sample of class " +
                        class_name(k + 1));
}

std::vector<Index> ExpressionDataset::class_counts() const {
    std::vector<Index> counts(class_count, 0);
    for (int y : labels) ++counts[y - 1];
    return counts;
}

std::vector<std::vector<Index>> ExpressionDataset::cell_counts() const {
    std::vector<std::vector<Index>> counts(study_count, std::vector<Index>(class_count, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) ++counts[study_ids[i] - 1][labels[i] - 1];
    return counts;
}

ExpressionDataset ExpressionDataset::subset(std::span<const Index> rows) const {
    ExpressionDataset out;
    out.features.resize(static_cast<Index>(rows.size()), feature_count());
    out.labels.reserve(rows.size());
    out.study_ids.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index i = rows[r];
        require(i >= 0 && i < sample_count(), ErrorCode::InvalidArgument, "row index out of range");
        out.features.row(static_cast<Index>(r)) = features.row(i);
        out.labels.push_back(labels[i]);
        out.study_ids.push_back(study_ids[i]);
    }
    out.feature_names = feature_names;
    out.class_count = class_count;
    out.study_count = study_count;
    out.class_names = class_names;
    out.study_names = study_names;
    return out;
}

std::vector<Index> ExpressionDataset::study_rows(int study) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < study_ids.size(); ++i)
        if (study_ids[i] == study) rows.push_back(static_cast<Index>(i));
    return rows;
}

ExpressionDataset ExpressionDataset::study_slice(int study) const {
    require(study >= 1 && study <= study_count, ErrorCode::InvalidArgument,
            "study index out of range");
    auto rows = study_rows(study);
    ExpressionDataset out = subset(rows);
    std::fill(out.study_ids.begin(), out.study_ids.end(), 1);
    out.study_count = 1;
    out.study_names.clear();
    if (!study_names.empty()) out.study_names.push_back(study_names[study - 1]);
    return out;
}

std::string ExpressionDataset::class_name(int label) const {
    if (label >= 1 && label <= static_cast<int>(class_names.size())) return class_names[label - 1];
    return std::to_string(label);
}

ExpressionDataset make_dataset(Eigen::MatrixXd features, std::vector<int> labels, int class_count,
                               std::vector<int> study_ids,
                               std::vector<std::string> feature_names) {
    ExpressionDataset data;
    const Index n = features.rows();
    if (study_ids.empty()) study_ids.assign(static_cast<std::size_t>(n), 1);
    if (feature_names.empty()) {
        feature_names.reserve(static_cast<std::size_t>(features.cols()));
        for (Index j = 0; j < features.cols(); ++j)
            feature_names.push_back("X" + std::to_string(j + 1));
    }
    int studies = 1;
    for (int s : study_ids) studies = std::max(studies, s);
    data.features = std::move(features);
    data.labels = std::move(labels);
    data.study_ids = std::move(study_ids);
    data.feature_names = std::move(feature_names);
    data.class_count = class_count;
    data.study_count = studies;
    data.validate();
    return data;
}

}  // namespace tgdr
