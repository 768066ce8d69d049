#include "tgdr/solver.hpp"

#include "tgdr/error.hpp"
#include "tgdr/path_engine.hpp"

#include <algorithm>
#include <cmath>

namespace tgdr {

void TgdrConfig::validate(int class_count, Index feature_count) const {
    require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
    require(delta_v > 0.0 && std::isfinite(delta_v), ErrorCode::InvalidArgument,
            "delta_v must be positive");
    require(max_steps >= 0, ErrorCode::InvalidArgument, "max_steps must be non-negative");
    require(snapshot_stride >= 1, ErrorCode::InvalidArgument, "snapshot stride must be >= 1");
    require(selection_tolerance > 0.0, ErrorCode::InvalidArgument,
            "selection tolerance must be positive");
    if (tau_per_class) {
        require(static_cast<int>(tau_per_class->size()) == class_count - 1,
                ErrorCode::InvalidArgument, "tau_per_class needs K-1 entries");
        for (double t : *tau_per_class)
            require(t >= 0.0 && t <= 1.0, ErrorCode::InvalidArgument,
                    "per-class tau must lie in [0, 1]");
    }
    require(allowed_features.empty() ||
                static_cast<Index>(allowed_features.size()) == feature_count,
            ErrorCode::DimMismatch, "allowed feature mask has the wrong length");
}

std::vector<double> TgdrConfig::class_taus(int class_count) const {
    if (tau_per_class) return *tau_per_class;
    return std::vector<double>(static_cast<std::size_t>(class_count - 1), tau);
}

ThresholdVector threshold_vector(const Eigen::MatrixXd& gradient, const std::vector<double>& taus) {
    require(static_cast<Index>(taus.size()) == gradient.rows(), ErrorCode::DimMismatch,
            "need one tau per class block");
    require(gradient.allFinite(), ErrorCode::NonFinite, "gradient contains non-finite values");
    ThresholdVector t;
    t.per_class.resize(gradient.rows(), gradient.cols());
    for (Index k = 0; k < gradient.rows(); ++k) {
        const double tau = taus[static_cast<std::size_t>(k)];
        require(tau >= 0.0 && tau <= 1.0, ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
        const double cut = tau * gradient.row(k).cwiseAbs().maxCoeff();
        t.per_class.row(k) = gradient.row(k).array().abs() >= cut;
    }
    t.f = t.per_class.colwise().any().transpose();
    return t;
}

ThresholdVector threshold_vector(const Eigen::MatrixXd& gradient, double tau) {
    return threshold_vector(gradient, std::vector<double>(static_cast<std::size_t>(gradient.rows()), tau));
}

namespace detail {

void apply_update(Eigen::Ref<Eigen::VectorXd> intercept, Eigen::MatrixXd& beta,
                  const StudyGradient& gradient, const ThresholdVector& threshold,
                  double delta_v) {
    intercept -= delta_v * gradient.intercept;
    for (Index j = 0; j < beta.cols(); ++j)
        if (threshold.f(j)) beta.col(j) -= delta_v * gradient.coef.col(j);
}

ThresholdVector masked_threshold(const Eigen::MatrixXd& gradient, const std::vector<double>& taus,
                                 const std::vector<bool>& allowed) {
    if (allowed.empty()) return threshold_vector(gradient, taus);
    Eigen::MatrixXd g = gradient;
    for (Index j = 0; j < g.cols(); ++j)
        if (!allowed[static_cast<std::size_t>(j)]) g.col(j).setZero();
    ThresholdVector t = threshold_vector(g, taus);
    for (Index j = 0; j < g.cols(); ++j) {
        if (!allowed[static_cast<std::size_t>(j)]) {
            t.per_class.col(j).setConstant(false);
            t.f(j) = false;
        }
    }
    return t;
}

double max_abs_allowed(const Eigen::MatrixXd& gradient, const std::vector<bool>& allowed) {
    double m = 0.0;
    for (Index j = 0; j < gradient.cols(); ++j)
        if (allowed.empty() || allowed[static_cast<std::size_t>(j)])
            m = std::max(m, gradient.col(j).cwiseAbs().maxCoeff());
    return m;
}

RegularizationPath run_path(const std::vector<StudyDesign>& designs, int class_count,
                            Index feature_count, const TgdrConfig& config,
                            const std::optional<Standardization>& standardization) {
    const int studies = static_cast<int>(designs.size());
    const auto taus = config.class_taus(class_count);

    RegularizationPath path;
    path.config = config;
    ModelCoefficients coeffs = ModelCoefficients::zeros(studies, class_count, feature_count);
    coeffs.standardization = standardization;

    auto record = [&](int step) {
        PathStep s;
        s.step = step;
        s.v = step * config.delta_v;
        s.coeffs = coeffs;
        s.active = coeffs.active_set(config.selection_tolerance);
        path.steps.push_back(std::move(s));
    };
    record(0);

    std::vector<StudyGradient> grads(static_cast<std::size_t>(studies));
    int done = 0;
    for (int step = 1; step <= config.max_steps; ++step) {
        double ll = 0.0;
        for (int m = 0; m < studies; ++m) {
            auto e = evaluate_study(designs[m], coeffs.intercepts.row(m).transpose(),
                                    coeffs.betas[m]);
            ll += e.log_likelihood;
            grads[m] = std::move(e.gradient);
        }
        bool finite = std::isfinite(ll);
        for (const auto& g : grads) finite = finite && g.coef.allFinite() && g.intercept.allFinite();
        require(finite, ErrorCode::Divergence,
                "non-finite log-likelihood or gradient at step " + std::to_string(step - 1));

        Eigen::MatrixXd meta = grads[0].coef;
        for (int m = 1; m < studies; ++m) meta += grads[m].coef;
        if (max_abs_allowed(meta, config.allowed_features) <= kZeroGradientFloor) {
            path.terminal_reason = TerminalReason::ZeroGradient;
            break;
        }
        const ThresholdVector f = masked_threshold(meta, taus, config.allowed_features);
        for (int m = 0; m < studies; ++m) {
            Eigen::VectorXd b0 = coeffs.intercepts.row(m).transpose();
            apply_update(b0, coeffs.betas[m], grads[m], f, config.delta_v);
            coeffs.intercepts.row(m) = b0.transpose();
        }
        done = step;
        if (step % config.snapshot_stride == 0 || step == config.max_steps) record(step);
    }
    if (path.steps.back().step != done) record(done);

    double final_ll = 0.0;
    for (int m = 0; m < studies; ++m)
        final_ll += evaluate_study(designs[m], coeffs.intercepts.row(m).transpose(), coeffs.betas[m])
                        .log_likelihood;
    require(std::isfinite(final_ll), ErrorCode::Divergence,
            "non-finite log-likelihood at step " + std::to_string(done));
    return path;
}

}  // namespace detail

ModelCoefficients tgdr_step(const ModelCoefficients& coeffs, const ExpressionDataset& data,
                            const TgdrConfig& config) {
    require(coeffs.study_count() == 1, ErrorCode::InvalidArgument,
            "tgdr_step takes single-study coefficients");
    config.validate(coeffs.class_count(), coeffs.feature_count());
    ExpressionDataset single = data;
    std::fill(single.study_ids.begin(), single.study_ids.end(), 1);
    single.study_count = 1;
    auto grads = negative_gradient(coeffs, single);
    const auto f = detail::masked_threshold(grads[0].coef, config.class_taus(coeffs.class_count()),
                                            config.allowed_features);
    ModelCoefficients out = coeffs;
    Eigen::VectorXd b0 = out.intercepts.row(0).transpose();
    detail::apply_update(b0, out.betas[0], grads[0], f, config.delta_v);
    out.intercepts.row(0) = b0.transpose();
    return out;
}

const PathStep& RegularizationPath::at_or_before(int k) const {
    require(!steps.empty(), ErrorCode::InvalidArgument, "empty path");
    auto it = std::upper_bound(steps.begin(), steps.end(), k,
                               [](int value, const PathStep& s) { return value < s.step; });
    require(it != steps.begin(), ErrorCode::InvalidArgument, "step index before path start");
    return *std::prev(it);
}

RegularizationPath fit_path(const ExpressionDataset& data, const TgdrConfig& config) {
    data.validate();
    config.validate(data.class_count, data.feature_count());
    std::optional<Standardization> standardization;
    if (config.standardize) standardization = Standardization::fit(data.features);
    Eigen::MatrixXd x = standardization ? standardization->apply(data.features) : data.features;
    std::vector<detail::StudyDesign> designs{detail::make_design(x, data.labels, data.class_count)};
    return detail::run_path(designs, data.class_count, data.feature_count(), config,
                            standardization);
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& probabilities) {
    std::vector<int> labels(static_cast<std::size_t>(probabilities.rows()));
    for (Index i = 0; i < probabilities.rows(); ++i) {
        Index best = 0;
        for (Index k = 1; k < probabilities.cols(); ++k)
            if (probabilities(i, k) > probabilities(i, best)) best = k;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    }
    return labels;
}

Prediction predict(const ModelCoefficients& coeffs, const Eigen::MatrixXd& features,
                   const std::vector<int>& study_ids) {
    Prediction p;
    p.probabilities = class_probabilities(coeffs, features, study_ids);
    p.labels = argmax_labels(p.probabilities);
    return p;
}

}  // namespace tgdr
