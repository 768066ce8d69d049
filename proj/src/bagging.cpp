#include "tgdr/bagging.hpp"

#include "tgdr/error.hpp"
#include "tgdr/parallel.hpp"
#include "tgdr/rng.hpp"
#include "tgdr/selection.hpp"

#include <algorithm>
#include <tuple>

namespace tgdr {

Resample bootstrap_resample(const ExpressionDataset& data, std::uint64_t seed,
                            std::uint64_t replicate, bool by_study) {
    const Index n = data.sample_count();
    require(n >= 1, ErrorCode::InvalidArgument, "cannot resample an empty dataset");
    Rng rng(derive_seed(seed, kStreamBootstrap, replicate));
    std::uniform_int_distribution<Index> pick(0, n - 1);

    // Only cells present in the source need to be covered.
    const auto source_cells = data.cell_counts();
    const auto source_classes = data.class_counts();
    Resample r;
    for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
        r.rows.resize(static_cast<std::size_t>(n));
        for (auto& row : r.rows) row = pick(rng);
        ExpressionDataset candidate = data.subset(r.rows);
        bool covered = true;
        if (by_study) {
            const auto cells = candidate.cell_counts();
            for (int m = 0; m < data.study_count && covered; ++m)
                for (int k = 0; k < data.class_count; ++k)
                    if (source_cells[m][k] > 0 && cells[m][k] == 0) covered = false;
        } else {
            const auto classes = candidate.class_counts();
            for (int k = 0; k < data.class_count; ++k)
                if (source_classes[k] > 0 && classes[k] == 0) covered = false;
        }
        if (covered) {
            r.data = std::move(candidate);
            return r;
        }
    }
    fail(ErrorCode::ResampleInfeasible,
         "could not draw a bootstrap sample covering every class after " +
             std::to_string(kMaxResampleAttempts) + " attempts");
}

BaggingReport bagging_run(const ExpressionDataset& data, const TgdrConfig& config,
                          const BaggingOptions& options) {
    require(options.n_bootstrap >= 1, ErrorCode::InvalidArgument, "need at least one bootstrap");
    const bool meta = options.fitter == Fitter::Meta;
    if (meta)
        data.validate_meta();
    else
        data.validate();
    config.validate(data.class_count, data.feature_count());

    const std::size_t nb = static_cast<std::size_t>(options.n_bootstrap);
    std::vector<std::optional<ModelCoefficients>> members(nb);
    std::vector<std::string> errors(nb);
    parallel_for(nb, options.jobs, [&](std::size_t b) {
        try {
            Resample r = bootstrap_resample(data, options.seed, b, meta);
            members[b] = fit_final(options.fitter, r.data, config);
        } catch (const Error& e) {
            errors[b] = e.what();
        }
    });

    BaggingReport report;
    report.n_bootstrap = options.n_bootstrap;
    report.config = config;
    report.fitter = options.fitter;
    report.seed = options.seed;
    report.selection_counts.assign(static_cast<std::size_t>(data.feature_count()), 0);
    for (std::size_t b = 0; b < nb; ++b) {
        if (!members[b]) {
            report.failures.push_back({static_cast<int>(b), errors[b]});
            continue;
        }
        ++report.n_succeeded;
        const auto active = members[b]->active_set(config.selection_tolerance);
        for (std::size_t j = 0; j < active.size(); ++j) report.selection_counts[j] += active[j];
        if (options.keep_members) {
            report.member_models.push_back(std::move(*members[b]));
            report.member_replicates.push_back(static_cast<int>(b));
        }
    }
    require(report.failures.size() * 10 <= nb, ErrorCode::TooManyFailures,
            std::to_string(report.failures.size()) + " of " + std::to_string(nb) +
                " bootstrap fits failed" +
                (report.failures.empty() ? "" : ": " + report.failures.front().message));
    report.frequencies.resize(data.feature_count());
    for (Index j = 0; j < data.feature_count(); ++j)
        report.frequencies(j) = static_cast<double>(report.selection_counts[static_cast<std::size_t>(j)]) /
                                static_cast<double>(report.n_succeeded);
    return report;
}

Prediction ensemble_predict(const BaggingReport& report, const Eigen::MatrixXd& features,
                            const std::vector<int>& study_ids) {
    require(!report.member_models.empty(), ErrorCode::InvalidArgument,
            "bagging report holds no member models");
    const Index n = features.rows();
    const int k = report.member_models.front().class_count();
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, k);
    Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(n, k);
    for (const auto& member : report.member_models) {
        auto p = predict(member, features, study_ids);
        mean += p.probabilities;
        for (Index i = 0; i < n; ++i) ++votes(i, p.labels[static_cast<std::size_t>(i)] - 1);
    }
    Prediction out;
    out.probabilities = mean / static_cast<double>(report.member_models.size());
    out.labels.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        Index best = 0;
        for (Index c = 1; c < k; ++c)
            if (votes(i, c) > votes(i, best)) best = c;
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    }
    return out;
}

std::vector<double> default_cutoff_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(0.05 * i);
    return grid;
}

std::vector<bool> features_above(const BaggingReport& report, double cutoff) {
    std::vector<bool> keep(static_cast<std::size_t>(report.frequencies.size()));
    for (Index j = 0; j < report.frequencies.size(); ++j)
        keep[static_cast<std::size_t>(j)] = report.frequencies(j) > cutoff;
    return keep;
}

ModelCoefficients refit_restricted(const ExpressionDataset& data, const TgdrConfig& config,
                                   Fitter fitter, const std::vector<bool>& features) {
    require(static_cast<Index>(features.size()) == data.feature_count(), ErrorCode::DimMismatch,
            "feature mask has the wrong length");
    require(std::find(features.begin(), features.end(), true) != features.end(),
            ErrorCode::NoFeatures, "no features pass the cutoff");
    TgdrConfig restricted = config;
    if (restricted.allowed_features.empty()) {
        restricted.allowed_features = features;
    } else {
        for (std::size_t j = 0; j < features.size(); ++j)
            restricted.allowed_features[j] = restricted.allowed_features[j] && features[j];
    }
    return fit_final(fitter, data, restricted);
}

CutoffSelection select_cutoff(const BaggingReport& report, const ExpressionDataset& data,
                              const std::vector<double>& cutoff_grid,
                              const ExpressionDataset* evaluation) {
    require(report.frequencies.size() == data.feature_count(), ErrorCode::DimMismatch,
            "bagging report and data feature counts differ");
    require(!cutoff_grid.empty(), ErrorCode::InvalidArgument, "empty cutoff grid");
    const ExpressionDataset& eval = evaluation ? *evaluation : data;

    CutoffSelection selection;
    std::optional<std::size_t> best;
    std::vector<ModelCoefficients> models;
    for (double cutoff : cutoff_grid) {
        require(cutoff > 0.0 && cutoff < 1.0, ErrorCode::InvalidArgument,
                "cutoffs must lie in (0, 1)");
        CutoffCandidate c;
        c.cutoff = cutoff;
        const auto keep = features_above(report, cutoff);
        c.kept_features = std::count(keep.begin(), keep.end(), true);
        if (c.kept_features == 0) {
            c.skipped = true;
            selection.candidates.push_back(c);
            models.emplace_back();
            continue;
        }
        ModelCoefficients model = refit_restricted(data, report.config, report.fitter, keep);
        auto p = predict_dataset(report.fitter, model, eval);
        c.error_pct = misclassification_error(p.labels, eval.labels);
        c.gbs = gbs(p.probabilities, eval.labels);
        c.model_size = model.active_count(report.config.selection_tolerance);
        selection.candidates.push_back(c);
        models.push_back(std::move(model));

        const auto key = [](const CutoffCandidate& x) {
            return std::make_tuple(x.error_pct, x.gbs, x.model_size, -x.cutoff);
        };
        const std::size_t idx = selection.candidates.size() - 1;
        if (!best || key(c) < key(selection.candidates[*best])) best = idx;
    }
    require(best.has_value(), ErrorCode::NoFeatures, "every cutoff leaves zero features");
    selection.cutoff = selection.candidates[*best].cutoff;
    selection.final_model = std::move(models[*best]);
    return selection;
}

}  // namespace tgdr
