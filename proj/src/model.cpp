#include "tgdr/model.hpp"

#include "tgdr/error.hpp"

#include <algorithm>
#include <cmath>

namespace tgdr {

ModelCoefficients ModelCoefficients::zeros(int studies, int class_count, Index features) {
    require(studies >= 1 && class_count >= 2 && features >= 1, ErrorCode::InvalidArgument,
            "invalid model dimensions");
    ModelCoefficients c;
    c.intercepts = Eigen::MatrixXd::Zero(studies, class_count - 1);
    c.betas.assign(static_cast<std::size_t>(studies),
                   Eigen::MatrixXd::Zero(class_count - 1, features));
    return c;
}

std::vector<bool> ModelCoefficients::active_set(double tolerance) const {
    std::vector<bool> active(static_cast<std::size_t>(feature_count()), false);
    for (const auto& block : betas)
        for (Index j = 0; j < block.cols(); ++j)
            if (block.col(j).cwiseAbs().maxCoeff() > tolerance) active[j] = true;
    return active;
}

Index ModelCoefficients::active_count(double tolerance) const {
    auto active = active_set(tolerance);
    return std::count(active.begin(), active.end(), true);
}

void ModelCoefficients::validate() const {
    require(!betas.empty(), ErrorCode::InvalidArgument, "model has no coefficient blocks");
    require(intercepts.rows() == study_count(), ErrorCode::DimMismatch,
            "intercept rows do not match study count");
    require(intercepts.cols() >= 1, ErrorCode::InvalidArgument, "model needs K >= 2");
    for (const auto& b : betas) {
        require(b.rows() == intercepts.cols() && b.cols() == feature_count(),
                ErrorCode::DimMismatch, "ragged coefficient blocks");
        require(b.allFinite(), ErrorCode::NonFinite, "non-finite coefficient");
    }
    require(intercepts.allFinite(), ErrorCode::NonFinite, "non-finite intercept");
    if (standardization)
        require(standardization->size() == feature_count(), ErrorCode::DimMismatch,
                "standardization size does not match feature count");
}

namespace detail {

StudyDesign make_design(const Eigen::MatrixXd& standardized, const std::vector<int>& labels,
                        int class_count) {
    StudyDesign d;
    d.x = standardized;
    d.labels = labels;
    d.y = Eigen::MatrixXd::Zero(standardized.rows(), class_count - 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < class_count) d.y(static_cast<Index>(i), labels[i] - 1) = 1.0;
    return d;
}

std::vector<StudyDesign> make_designs(const ExpressionDataset& data,
                                      const std::optional<Standardization>& standardization) {
    Eigen::MatrixXd x = standardization ? standardization->apply(data.features) : data.features;
    std::vector<StudyDesign> designs;
    designs.reserve(static_cast<std::size_t>(data.study_count));
    for (int m = 1; m <= data.study_count; ++m) {
        auto rows = data.study_rows(m);
        Eigen::MatrixXd xm(static_cast<Index>(rows.size()), x.cols());
        std::vector<int> labels;
        labels.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            xm.row(static_cast<Index>(r)) = x.row(rows[r]);
            labels.push_back(data.labels[rows[r]]);
        }
        designs.push_back(make_design(xm, labels, data.class_count));
    }
    return designs;
}

Eigen::MatrixXd logits(const Eigen::MatrixXd& x, const Eigen::VectorXd& intercept,
                       const Eigen::MatrixXd& beta) {
    Eigen::MatrixXd eta = x * beta.transpose();
    eta.rowwise() += intercept.transpose();
    return eta.cwiseMax(-kLogitClamp).cwiseMin(kLogitClamp);
}

Eigen::MatrixXd softmax_from_logits(const Eigen::MatrixXd& eta) {
    const Index n = eta.rows();
    const Index km1 = eta.cols();
    Eigen::MatrixXd p(n, km1 + 1);
    for (Index i = 0; i < n; ++i) {
        double m = std::max(0.0, eta.row(i).maxCoeff());
        double denom = std::exp(-m);
        for (Index k = 0; k < km1; ++k) {
            p(i, k) = std::exp(eta(i, k) - m);
            denom += p(i, k);
        }
        p(i, km1) = std::exp(-m);
        p.row(i) /= denom;
    }
    return p;
}

Evaluation evaluate_study(const StudyDesign& design, const Eigen::VectorXd& intercept,
                          const Eigen::MatrixXd& beta) {
    const Index n = design.x.rows();
    const Index km1 = beta.rows();
    Eigen::MatrixXd eta = logits(design.x, intercept, beta);
    // Residuals p - y for the non-reference classes.
    Eigen::MatrixXd resid(n, km1);
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
        double m = std::max(0.0, eta.row(i).maxCoeff());
        double denom = std::exp(-m);
        for (Index k = 0; k < km1; ++k) {
            resid(i, k) = std::exp(eta(i, k) - m);
            denom += resid(i, k);
        }
        const int y = design.labels[static_cast<std::size_t>(i)];
        ll += (y <= km1 ? eta(i, y - 1) : 0.0) - (m + std::log(denom));
        resid.row(i) /= denom;
    }
    resid -= design.y;
    Evaluation e;
    e.log_likelihood = ll;
    e.gradient.intercept = resid.colwise().sum().transpose();
    e.gradient.coef = resid.transpose() * design.x;
    return e;
}

}  // namespace detail

namespace {

void check_model_data(const ModelCoefficients& coeffs, const ExpressionDataset& data) {
    coeffs.validate();
    require(coeffs.feature_count() == data.feature_count(), ErrorCode::DimMismatch,
            "model has " + std::to_string(coeffs.feature_count()) + " features, data has " +
                std::to_string(data.feature_count()));
    require(coeffs.class_count() == data.class_count, ErrorCode::DimMismatch,
            "model has " + std::to_string(coeffs.class_count()) + " classes, data has " +
                std::to_string(data.class_count));
    require(coeffs.study_count() == 1 || coeffs.study_count() == data.study_count,
            ErrorCode::DimMismatch, "model and data study counts differ");
}

}  // namespace

Eigen::VectorXd class_probabilities(const ModelCoefficients& coeffs, const Eigen::VectorXd& x,
                                    int study) {
    coeffs.validate();
    require(x.size() == coeffs.feature_count(), ErrorCode::DimMismatch,
            "sample has " + std::to_string(x.size()) + " features, model expects " +
                std::to_string(coeffs.feature_count()));
    require(x.allFinite(), ErrorCode::NonFinite, "sample contains non-finite values");
    require(study >= 1 && study <= coeffs.study_count(), ErrorCode::InvalidArgument,
            "study index out of range");
    Eigen::MatrixXd row = (coeffs.standardization ? coeffs.standardization->apply(x) : x).transpose();
    Eigen::MatrixXd eta =
        detail::logits(row, coeffs.intercepts.row(study - 1).transpose(), coeffs.betas[study - 1]);
    return detail::softmax_from_logits(eta).row(0).transpose();
}

Eigen::MatrixXd class_probabilities(const ModelCoefficients& coeffs,
                                    const Eigen::MatrixXd& features,
                                    const std::vector<int>& study_ids) {
    coeffs.validate();
    require(features.cols() == coeffs.feature_count(), ErrorCode::DimMismatch,
            "data has " + std::to_string(features.cols()) + " features, model expects " +
                std::to_string(coeffs.feature_count()));
    require(features.allFinite(), ErrorCode::NonFinite, "features contain non-finite values");
    require(study_ids.empty() || static_cast<Index>(study_ids.size()) == features.rows(),
            ErrorCode::DimMismatch, "study id count does not match sample count");
    Eigen::MatrixXd x =
        coeffs.standardization ? coeffs.standardization->apply(features) : features;
    if (coeffs.study_count() == 1 || study_ids.empty()) {
        return detail::softmax_from_logits(
            detail::logits(x, coeffs.intercepts.row(0).transpose(), coeffs.betas[0]));
    }
    Eigen::MatrixXd p(x.rows(), coeffs.class_count());
    for (Index i = 0; i < x.rows(); ++i) {
        const int s = study_ids[static_cast<std::size_t>(i)];
        require(s >= 1 && s <= coeffs.study_count(), ErrorCode::InvalidArgument,
                "study index out of range");
        p.row(i) = detail::softmax_from_logits(detail::logits(
            x.row(i), coeffs.intercepts.row(s - 1).transpose(), coeffs.betas[s - 1]));
    }
    return p;
}

double log_likelihood(const ModelCoefficients& coeffs, const ExpressionDataset& data) {
    check_model_data(coeffs, data);
    double total = 0.0;
    if (coeffs.study_count() == 1) {
        Eigen::MatrixXd x =
            coeffs.standardization ? coeffs.standardization->apply(data.features) : data.features;
        auto design = detail::make_design(x, data.labels, data.class_count);
        return detail::evaluate_study(design, coeffs.intercepts.row(0).transpose(), coeffs.betas[0])
            .log_likelihood;
    }
    auto designs = detail::make_designs(data, coeffs.standardization);
    for (int m = 0; m < coeffs.study_count(); ++m)
        total += detail::evaluate_study(designs[m], coeffs.intercepts.row(m).transpose(),
                                        coeffs.betas[m])
                     .log_likelihood;
    return total;
}

std::vector<StudyGradient> negative_gradient(const ModelCoefficients& coeffs,
                                             const ExpressionDataset& data) {
    check_model_data(coeffs, data);
    std::vector<StudyGradient> out;
    if (coeffs.study_count() == 1) {
        Eigen::MatrixXd x =
            coeffs.standardization ? coeffs.standardization->apply(data.features) : data.features;
        auto design = detail::make_design(x, data.labels, data.class_count);
        out.push_back(
            detail::evaluate_study(design, coeffs.intercepts.row(0).transpose(), coeffs.betas[0])
                .gradient);
    } else {
        auto designs = detail::make_designs(data, coeffs.standardization);
        for (int m = 0; m < coeffs.study_count(); ++m)
            out.push_back(detail::evaluate_study(designs[m], coeffs.intercepts.row(m).transpose(),
                                                 coeffs.betas[m])
                              .gradient);
    }
    for (const auto& g : out)
        require(g.intercept.allFinite() && g.coef.allFinite(), ErrorCode::Divergence,
                "non-finite gradient");
    return out;
}

}  // namespace tgdr
