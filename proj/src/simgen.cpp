#include "tgdr/simgen.hpp"

#include "tgdr/bagging.hpp"
#include "tgdr/error.hpp"
#include "tgdr/parallel.hpp"
#include "tgdr/rng.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace tgdr {

void SimDesign::validate() const {
    require(n_train >= 1 && n_test >= 1, ErrorCode::InvalidArgument,
            "simulation sample sizes must be positive");
    const Index need = correlation_mode == CorrelationMode::Example2 ? 8 : 4;
    require(d >= need, ErrorCode::InvalidArgument,
            "simulation needs at least " + std::to_string(need) + " features");
}

Eigen::Vector3d simulation_class_probabilities(const Eigen::VectorXd& x) {
    require(x.size() >= 4, ErrorCode::DimMismatch, "simulation model needs X1..X4");
    const double f1 = 0.5 - 2.0 * x(0) + 1.2 * x(1) + 0.8 * x(2);
    const double f2 = -1.5 + 1.7 * x(0) - 1.5 * x(1) - x(3);
    const double m = std::max({0.0, f1, f2});
    Eigen::Vector3d p(std::exp(-m), std::exp(f1 - m), std::exp(f2 - m));
    return p / p.sum();
}

namespace {

struct CorrelatedPair {
    Index a;
    Index b;
    double rho;
};

constexpr CorrelatedPair kExample2Pairs[] = {
    {0, 4, 0.8}, {2, 6, 0.8}, {1, 5, -0.8}, {3, 7, -0.8}};

ExpressionDataset draw(const SimDesign& design, Index n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(n, design.d);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < design.d; ++j) x(i, j) = normal(rng);
        if (design.correlation_mode == CorrelationMode::Example2) {
            for (const auto& p : kExample2Pairs)
                x(i, p.b) = p.rho * x(i, p.a) + std::sqrt(1.0 - p.rho * p.rho) * x(i, p.b);
        }
        const Eigen::Vector3d prob = simulation_class_probabilities(x.row(i).transpose());
        // The uniform is consumed under both rules so feature streams match.
        const double u = unif(rng);
        int label = 3;
        if (design.label_rule == LabelRule::Argmax) {
            Index best = 0;
            for (Index k = 1; k < 3; ++k)
                if (prob(k) > prob(best)) best = k;
            label = static_cast<int>(best) + 1;
        } else if (u < prob(0)) {
            label = 1;
        } else if (u < prob(0) + prob(1)) {
            label = 2;
        }
        labels[static_cast<std::size_t>(i)] = label;
    }
    ExpressionDataset data = make_dataset(std::move(x), std::move(labels), 3);
    data.class_names = {"1", "2", "3"};
    return data;
}

SimData draw_pair(const SimDesign& design) {
    design.validate();
    if (design.correlation_mode == CorrelationMode::Example2) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(example2_covariance(design.d));
        require(eig.eigenvalues().minCoeff() > 0.0, ErrorCode::InvalidArgument,
                "simulation covariance is not positive definite");
    }
    return {draw(design, design.n_train, derive_seed(design.seed, kStreamSimTrain)),
            draw(design, design.n_test, derive_seed(design.seed, kStreamSimTest))};
}

}  // namespace

Eigen::MatrixXd example2_covariance(Index d) {
    require(d >= 8, ErrorCode::InvalidArgument, "example 2 needs at least 8 features");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d);
    for (const auto& p : kExample2Pairs) {
        cov(p.a, p.b) = p.rho;
        cov(p.b, p.a) = p.rho;
    }
    return cov;
}

SimData generate_example1(const SimDesign& design) {
    require(design.correlation_mode == CorrelationMode::Independent, ErrorCode::InvalidArgument,
            "example 1 uses independent features");
    return draw_pair(design);
}

SimData generate_example2(const SimDesign& design) {
    require(design.correlation_mode == CorrelationMode::Example2, ErrorCode::InvalidArgument,
            "example 2 uses the correlated design");
    return draw_pair(design);
}

SimData generate(const SimDesign& design) { return draw_pair(design); }

namespace {

ReplicateResult run_replicate(const Table1Options& options, int r) {
    ReplicateResult out;
    out.replicate = r;
    SimDesign design = options.design;
    design.seed = derive_seed(options.seed, kStreamReplicate, static_cast<std::uint64_t>(r));
    SimData sim = generate(design);

    CvOptions cv;
    cv.tau_grid = options.tau_grid;
    cv.max_steps = options.max_steps;
    cv.folds = options.folds;
    cv.stride = options.stride;
    cv.seed = derive_seed(design.seed, kStreamFolds);
    cv.base = options.base;
    CvResult tuned = k_fold_cv(sim.train, cv);
    out.tau = tuned.best.tau;
    out.k = tuned.best.k;
    out.cv_error_pct = tuned.best.error_pct;

    const TgdrConfig config = tuned.best_config(options.base);
    ModelCoefficients raw = fit_final(Fitter::Tgdr, sim.train, config);
    const auto active = raw.active_set(config.selection_tolerance);
    for (int j = 0; j < kTrackedFeatures; ++j) out.selected[j] = active[static_cast<std::size_t>(j)];
    out.raw_size = raw.active_count(config.selection_tolerance);
    auto p = predict(raw, sim.test.features);
    out.raw_error_pct = misclassification_error(p.labels, sim.test.labels);
    out.raw_gbs = gbs(p.probabilities, sim.test.labels);

    BaggingOptions bag;
    bag.n_bootstrap = options.n_bootstrap;
    bag.seed = derive_seed(design.seed, kStreamBootstrap);
    bag.keep_members = false;
    BaggingReport report = bagging_run(sim.train, config, bag);
    for (int j = 0; j < kTrackedFeatures; ++j) out.bf[j] = report.frequencies(j);

    for (double cutoff : options.cutoffs) {
        const auto keep = features_above(report, cutoff);
        if (std::find(keep.begin(), keep.end(), true) == keep.end()) {
            out.cutoff_ok.push_back(false);
            out.cutoff_size.push_back(0);
            out.cutoff_error_pct.push_back(0.0);
            continue;
        }
        ModelCoefficients reduced = refit_restricted(sim.train, config, Fitter::Tgdr, keep);
        auto pr = predict(reduced, sim.test.features);
        out.cutoff_ok.push_back(true);
        out.cutoff_size.push_back(reduced.active_count(config.selection_tolerance));
        out.cutoff_error_pct.push_back(misclassification_error(pr.labels, sim.test.labels));
    }
    out.ok = true;
    return out;
}

std::string percent_label(double cutoff) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "BF>%g%%", cutoff * 100.0);
    return buf;
}

}  // namespace

Table1Summary replicate_table1(const Table1Options& options) {
    require(options.n_datasets >= 1, ErrorCode::InvalidArgument, "need at least one replicate");
    options.design.validate();
    Table1Summary summary;
    summary.replicates.resize(static_cast<std::size_t>(options.n_datasets));
    parallel_for(summary.replicates.size(), options.jobs, [&](std::size_t r) {
        try {
            summary.replicates[r] = run_replicate(options, static_cast<int>(r));
        } catch (const Error& e) {
            summary.replicates[r].replicate = static_cast<int>(r);
            summary.replicates[r].ok = false;
            summary.replicates[r].error = e.what();
        }
    });

    Table1Row raw;
    raw.name = "multi-TGDR";
    double cv_sum = 0.0;
    for (const auto& rep : summary.replicates) {
        if (!rep.ok) {
            summary.excluded.push_back(rep.replicate);
            continue;
        }
        ++raw.replicates_used;
        for (int j = 0; j < kTrackedFeatures; ++j) {
            raw.selection_pct[j] += rep.selected[j] ? 1.0 : 0.0;
            raw.average_bf_pct[j] += rep.bf[j];
        }
        raw.average_size += static_cast<double>(rep.raw_size);
        raw.average_error_pct += rep.raw_error_pct;
        cv_sum += rep.cv_error_pct;
    }
    if (raw.replicates_used > 0) {
        const double used = raw.replicates_used;
        for (int j = 0; j < kTrackedFeatures; ++j) {
            raw.selection_pct[j] *= 100.0 / used;
            raw.average_bf_pct[j] *= 100.0 / used;
        }
        raw.average_size /= used;
        raw.average_error_pct /= used;
        summary.average_cv_error_pct = cv_sum / used;
    }
    summary.rows.push_back(raw);

    for (std::size_t c = 0; c < options.cutoffs.size(); ++c) {
        Table1Row row;
        row.name = percent_label(options.cutoffs[c]);
        for (const auto& rep : summary.replicates) {
            if (!rep.ok || !rep.cutoff_ok[c]) continue;
            ++row.replicates_used;
            row.average_size += static_cast<double>(rep.cutoff_size[c]);
            row.average_error_pct += rep.cutoff_error_pct[c];
        }
        if (row.replicates_used > 0) {
            row.average_size /= row.replicates_used;
            row.average_error_pct /= row.replicates_used;
        }
        summary.rows.push_back(row);
    }
    return summary;
}

void write_table1_csv(std::ostream& out, const Table1Summary& summary) {
    out << "row";
    for (int j = 1; j <= kTrackedFeatures; ++j) out << ",selected_pct_X" << j << ",avg_bf_pct_X" << j;
    out << ",avg_selected,avg_error_pct,replicates\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    for (std::size_t r = 0; r < summary.rows.size(); ++r) {
        const auto& row = summary.rows[r];
        out << row.name;
        for (int j = 0; j < kTrackedFeatures; ++j) {
            if (r == 0)
                out << ',' << num(row.selection_pct[j]) << ',' << num(row.average_bf_pct[j]);
            else
                out << ",,";
        }
        out << ',' << num(row.average_size) << ',' << num(row.average_error_pct) << ','
            << row.replicates_used << '\n';
    }
}

void write_table1_text(std::ostream& out, const Table1Summary& summary) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s", "");
    out << buf;
    for (int j = 1; j <= kTrackedFeatures; ++j) {
        std::snprintf(buf, sizeof buf, " %8s %7s", ("sel%X" + std::to_string(j)).c_str(),
                      ("BF%X" + std::to_string(j)).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " %9s %9s %5s\n", "avg#genes", "error%", "reps");
    out << buf;
    for (std::size_t r = 0; r < summary.rows.size(); ++r) {
        const auto& row = summary.rows[r];
        std::snprintf(buf, sizeof buf, "%-12s", row.name.c_str());
        out << buf;
        for (int j = 0; j < kTrackedFeatures; ++j) {
            if (r == 0)
                std::snprintf(buf, sizeof buf, " %8.1f %7.2f", row.selection_pct[j],
                              row.average_bf_pct[j]);
            else
                std::snprintf(buf, sizeof buf, " %8s %7s", "---", "---");
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %9.2f %9.2f %5d\n", row.average_size,
                      row.average_error_pct, row.replicates_used);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "average CV error at the selected (tau, k): %.2f%%\n",
                  summary.average_cv_error_pct);
    out << buf;
    if (!summary.excluded.empty()) out << "excluded replicates: " << summary.excluded.size() << '\n';
}

void write_replicates_csv(std::ostream& out, const Table1Summary& summary) {
    out << "replicate,ok,tau,k,cv_error_pct,raw_size,raw_error_pct,raw_gbs";
    for (int j = 1; j <= kTrackedFeatures; ++j) out << ",selected_X" << j << ",bf_X" << j;
    out << ",cutoff_sizes,cutoff_errors,error\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    for (const auto& r : summary.replicates) {
        out << r.replicate << ',' << (r.ok ? 1 : 0) << ',' << num(r.tau) << ',' << r.k << ','
            << num(r.cv_error_pct) << ',' << r.raw_size << ',' << num(r.raw_error_pct) << ','
            << num(r.raw_gbs);
        for (int j = 0; j < kTrackedFeatures; ++j)
            out << ',' << (r.selected[j] ? 1 : 0) << ',' << num(r.bf[j]);
        out << ',';
        for (std::size_t c = 0; c < r.cutoff_size.size(); ++c)
            out << (c ? ";" : "") << r.cutoff_size[c];
        out << ',';
        for (std::size_t c = 0; c < r.cutoff_error_pct.size(); ++c)
            out << (c ? ";" : "") << num(r.cutoff_error_pct[c]);
        std::string err = r.error;
        for (auto& ch : err)
            if (ch == ',' || ch == '\n') ch = ' ';
        out << ',' << err << '\n';
    }
}

}  // namespace tgdr
