#include "tgdr/selection.hpp"

#include "tgdr/error.hpp"
#include "tgdr/parallel.hpp"
#include "tgdr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace tgdr {

double gbs(const Eigen::MatrixXd& probabilities, std::span<const int> labels) {
    const Index n = probabilities.rows();
    const Index k = probabilities.cols();
    require(n >= 1, ErrorCode::InvalidArgument, "GBS needs at least one sample");
    require(static_cast<Index>(labels.size()) == n, ErrorCode::DimMismatch,
            "label count does not match probability rows");
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double row_sum = probabilities.row(i).sum();
        require(std::abs(row_sum - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
                "probability row " + std::to_string(i) + " does not sum to 1");
        const int y = labels[static_cast<std::size_t>(i)];
        require(y >= 1 && y <= k, ErrorCode::InvalidArgument, "label out of range");
        for (Index c = 0; c < k; ++c) {
            const double diff = (c + 1 == y ? 1.0 : 0.0) - probabilities(i, c);
            total += diff * diff;
        }
    }
    return total / (2.0 * static_cast<double>(n));
}

double misclassification_error(std::span<const int> predicted, std::span<const int> truth) {
    require(predicted.size() == truth.size(), ErrorCode::DimMismatch,
            "predicted and true label counts differ");
    require(!truth.empty(), ErrorCode::InvalidArgument, "no labels to compare");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(truth.size());
}

EvaluationReport evaluate(const Eigen::MatrixXd& probabilities, std::span<const int> labels) {
    EvaluationReport r;
    r.n = probabilities.rows();
    r.gbs = gbs(probabilities, labels);
    auto predicted = argmax_labels(probabilities);
    r.error_pct = misclassification_error(predicted, labels);
    const Index k = probabilities.cols();
    r.confusion = Eigen::MatrixXi::Zero(k, k);
    for (std::size_t i = 0; i < labels.size(); ++i) ++r.confusion(labels[i] - 1, predicted[i] - 1);
    return r;
}

std::vector<double> CvOptions::default_tau_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    return grid;
}

TgdrConfig CvResult::best_config(const TgdrConfig& base) const {
    TgdrConfig c = base;
    c.tau = best.tau;
    c.tau_per_class.reset();
    c.max_steps = best.k;
    return c;
}

std::vector<int> cv_step_grid(int max_steps, int stride) {
    require(max_steps >= 1, ErrorCode::InvalidArgument, "cross-validation needs max_steps >= 1");
    require(stride >= 1, ErrorCode::InvalidArgument, "stride must be >= 1");
    std::vector<int> ks;
    for (int k = stride; k <= max_steps; k += stride) ks.push_back(k);
    if (ks.empty() || ks.back() != max_steps) ks.push_back(max_steps);
    return ks;
}

std::vector<int> assign_folds(const ExpressionDataset& data, int folds, std::uint64_t seed,
                              bool stratified, bool by_study) {
    const Index n = data.sample_count();
    require(folds >= 2, ErrorCode::InvalidArgument, "need at least two folds");
    require(folds <= n, ErrorCode::InvalidArgument, "more folds than samples");

    // Strata in a fixed order: (study, class) cells, or classes, or one.
    std::vector<std::vector<Index>> strata;
    if (!stratified) {
        strata.emplace_back(static_cast<std::size_t>(n));
        std::iota(strata[0].begin(), strata[0].end(), Index{0});
    } else {
        const int studies = by_study ? data.study_count : 1;
        strata.resize(static_cast<std::size_t>(studies * data.class_count));
        for (Index i = 0; i < n; ++i) {
            const int s = by_study ? data.study_ids[static_cast<std::size_t>(i)] - 1 : 0;
            strata[static_cast<std::size_t>(s * data.class_count + data.labels[i] - 1)].push_back(i);
        }
    }
    Rng rng(derive_seed(seed, kStreamFolds));
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (auto& stratum : strata) {
        std::shuffle(stratum.begin(), stratum.end(), rng);
        for (Index i : stratum) {
            assignment[static_cast<std::size_t>(i)] = next;
            next = (next + 1) % folds;
        }
    }
    return assignment;
}

CvResult k_fold_cv(const ExpressionDataset& data, const CvOptions& options,
                   const FoldObserver& observer) {
    const bool meta = options.fitter == Fitter::Meta;
    if (meta)
        data.validate_meta();
    else
        data.validate();
    require(!options.tau_grid.empty(), ErrorCode::InvalidArgument, "empty tau grid");
    for (double t : options.tau_grid)
        require(t >= 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "tau grid values must lie in [0, 1]");
    require(options.folds >= 2, ErrorCode::InvalidArgument, "need at least two folds");
    if (options.stratified) {
        for (Index c : data.class_counts())
            require(c >= options.folds, ErrorCode::Stratification,
                    "a class has fewer samples than folds");
        if (meta)
            for (const auto& row : data.cell_counts())
                for (Index c : row)
                    require(c >= 2, ErrorCode::Stratification,
                            "a study x class cell has fewer than two samples");
    }

    const auto ks = cv_step_grid(options.max_steps, options.stride);
    CvResult result;
    result.folds = options.folds;
    result.seed = options.seed;
    result.fold_assignment =
        assign_folds(data, options.folds, options.seed, options.stratified, meta);

    std::vector<std::vector<Index>> train(options.folds), test(options.folds);
    for (Index i = 0; i < data.sample_count(); ++i)
        for (int f = 0; f < options.folds; ++f)
            (result.fold_assignment[static_cast<std::size_t>(i)] == f ? test : train)[f].push_back(i);

    const std::size_t n_tau = options.tau_grid.size();
    // probs[tau][k] holds out-of-fold probabilities for all samples.
    std::vector<std::vector<Eigen::MatrixXd>> probs(
        n_tau, std::vector<Eigen::MatrixXd>(ks.size(),
                                            Eigen::MatrixXd(data.sample_count(), data.class_count)));

    if (observer)
        for (int f = 0; f < options.folds; ++f)
            for (std::size_t t = 0; t < n_tau; ++t) observer(f, train[f], test[f]);

    parallel_for(n_tau * static_cast<std::size_t>(options.folds), options.jobs, [&](std::size_t job) {
        const std::size_t t = job / static_cast<std::size_t>(options.folds);
        const int f = static_cast<int>(job % static_cast<std::size_t>(options.folds));
        ExpressionDataset train_data = data.subset(train[f]);
        ExpressionDataset test_data = data.subset(test[f]);
        TgdrConfig config = options.base;
        config.tau = options.tau_grid[t];
        config.tau_per_class.reset();
        config.max_steps = options.max_steps;
        config.snapshot_stride = options.stride;
        auto path = fit(options.fitter, train_data, config);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            const auto& snap = path.at_or_before(ks[ki]);
            auto p = predict_dataset(options.fitter, snap.coeffs, test_data);
            for (std::size_t r = 0; r < test[f].size(); ++r)
                probs[t][ki].row(test[f][r]) = p.probabilities.row(static_cast<Index>(r));
        }
    });

    bool have_best = false;
    result.min_error_pct = 100.0;
    for (std::size_t t = 0; t < n_tau; ++t) {
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            CvGridPoint g;
            g.tau = options.tau_grid[t];
            g.k = ks[ki];
            auto labels = argmax_labels(probs[t][ki]);
            g.error_pct = misclassification_error(labels, data.labels);
            g.gbs = gbs(probs[t][ki], data.labels);
            result.grid.push_back(g);
            result.min_error_pct = std::min(result.min_error_pct, g.error_pct);
            const auto key = [](const CvGridPoint& p) {
                return std::make_tuple(p.error_pct, p.gbs, p.k, p.tau);
            };
            if (!have_best || key(g) < key(result.best)) {
                result.best = g;
                result.best_labels = std::move(labels);
                result.best_probabilities = probs[t][ki];
                have_best = true;
            }
        }
    }
    return result;
}

}  // namespace tgdr
