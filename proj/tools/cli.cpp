#include "cli.hpp"

#include "tgdr/bagging.hpp"
#include "tgdr/error.hpp"
#include "tgdr/fitter.hpp"
#include "tgdr/io.hpp"
#include "tgdr/meta.hpp"
#include "tgdr/selection.hpp"
#include "tgdr/simgen.hpp"
#include "tgdr/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace tgdr::cli {

namespace {

using nlohmann::json;

struct DataFlags {
    std::string data;
    std::string label_col = "label";
    std::string study_col;
    std::string id_col;
    std::string delimiter = "auto";
    std::vector<std::string> classes;

    void add(CLI::App* app, bool data_required = true) {
        auto* opt = app->add_option("--data", data, "Delimited text file, samples as rows");
        if (data_required) opt->required();
        app->add_option("--label-col", label_col, "Label column name")->capture_default_str();
        app->add_option("--study-col", study_col, "Study column name");
        app->add_option("--id-col", id_col, "Sample id column name");
        app->add_option("--delimiter", delimiter, "auto, comma or tab")
            ->check(CLI::IsMember({"auto", "comma", "tab"}))
            ->capture_default_str();
        app->add_option("--classes", classes, "Class order, reference class last")->delimiter(',');
    }

    DatasetOptions options() const {
        DatasetOptions o;
        o.label_col = label_col;
        if (!study_col.empty()) o.study_col = study_col;
        if (!id_col.empty()) o.id_col = id_col;
        o.delimiter = delimiter == "comma" ? ',' : delimiter == "tab" ? '\t' : 0;
        o.class_order = classes;
        return o;
    }

    json to_json() const {
        return {{"data", data},         {"label_col", label_col}, {"study_col", study_col},
                {"id_col", id_col},     {"delimiter", delimiter}, {"classes", classes}};
    }
};

struct PathFlags {
    double tau = 0.5;
    std::vector<double> tau_per_class;
    int steps = 1000;
    double delta_v = 0.01;
    bool no_standardize = false;
    double selection_tolerance = 1e-12;

    void add(CLI::App* app, bool with_tau = true, bool with_steps = true) {
        if (with_tau) {
            app->add_option("--tau", tau, "Threshold in [0, 1]")
                ->check(CLI::Range(0.0, 1.0))
                ->capture_default_str();
            app->add_option("--tau-per-class", tau_per_class, "One tau per non-reference class")
                ->delimiter(',');
        }
        if (with_steps)
            app->add_option("--steps", steps, "Number of path steps k")
                ->check(CLI::NonNegativeNumber)
                ->capture_default_str();
        app->add_option("--delta-v", delta_v, "Step increment")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_flag("--no-standardize", no_standardize, "Use raw feature scale");
        app->add_option("--selection-tolerance", selection_tolerance,
                        "Coefficient magnitude counted as selected")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    }

    TgdrConfig config(std::uint64_t seed) const {
        TgdrConfig c;
        c.tau = tau;
        if (!tau_per_class.empty()) c.tau_per_class = tau_per_class;
        c.max_steps = steps;
        c.delta_v = delta_v;
        c.standardize = !no_standardize;
        c.selection_tolerance = selection_tolerance;
        c.seed = seed;
        return c;
    }
};

void echo(std::ostream& out, const std::string& command, json resolved) {
    resolved["command"] = command;
    out << "config: " << resolved.dump() << '\n';
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::Io, "cannot write '" + path + "'");
    f << content;
    require(static_cast<bool>(f), ErrorCode::Io, "failed writing '" + path + "'");
}

std::string key_value_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ostringstream s;
    s << "metric,value\n";
    for (const auto& [k, v] : rows) s << k << ',' << v << '\n';
    return s.str();
}

void print_key_values(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.first.size());
    for (const auto& [k, v] : rows) out << "  " << k << std::string(width - k.size() + 2, ' ') << v << '\n';
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? std::string(1, sep) : "") + items[i];
    return s;
}

Eigen::MatrixXd align_features(const ExpressionDataset& data, const std::vector<std::string>& names) {
    require(data.feature_count() == static_cast<Index>(names.size()), ErrorCode::DimMismatch,
            "data has " + std::to_string(data.feature_count()) + " features, model expects " +
                std::to_string(names.size()));
    if (data.feature_names == names) return data.features;
    std::map<std::string, Index> position;
    for (Index j = 0; j < data.feature_count(); ++j) position[data.feature_names[j]] = j;
    Eigen::MatrixXd x(data.sample_count(), data.feature_count());
    for (std::size_t j = 0; j < names.size(); ++j) {
        auto it = position.find(names[j]);
        require(it != position.end(), ErrorCode::DimMismatch,
                "feature '" + names[j] + "' of the model is missing from the data");
        x.col(static_cast<Index>(j)) = data.features.col(it->second);
    }
    return x;
}

// Study ids of `data` re-expressed in the model's study order.
std::vector<int> align_studies(const ExpressionDataset& data, const std::vector<std::string>& model_studies) {
    std::map<std::string, int> index;
    for (std::size_t m = 0; m < model_studies.size(); ++m) index[model_studies[m]] = static_cast<int>(m) + 1;
    std::vector<int> ids;
    ids.reserve(data.study_ids.size());
    for (int s : data.study_ids) {
        const std::string& name = data.study_names.at(static_cast<std::size_t>(s - 1));
        auto it = index.find(name);
        require(it != index.end(), ErrorCode::IncompatibleModel,
                "study '" + name + "' is not part of the model; pool the model to predict new studies");
        ids.push_back(it->second);
    }
    return ids;
}

bool uses_study_blocks(const ModelFile& model) {
    return model.mode == ModelMode::Meta ||
           (model.mode == ModelMode::Bagged && model.bagging && model.bagging->fitter == Fitter::Meta);
}

std::string predictions_csv(const std::vector<std::string>& ids, const Prediction& p,
                            const std::vector<std::string>& classes) {
    std::ostringstream s;
    s << "sample,predicted";
    for (const auto& c : classes) s << ",prob_" << c;
    s << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
        s << ids[i] << ',' << classes[static_cast<std::size_t>(p.labels[i] - 1)];
        for (Index k = 0; k < p.probabilities.cols(); ++k)
            s << ',' << format_double(p.probabilities(static_cast<Index>(i), k));
        s << '\n';
    }
    return s.str();
}

std::vector<std::pair<std::string, std::string>> evaluation_rows(const EvaluationReport& r,
                                                                 const std::vector<std::string>& classes) {
    std::vector<std::pair<std::string, std::string>> rows{
        {"n", std::to_string(r.n)},
        {"error_pct", format_double(r.error_pct)},
        {"gbs", format_double(r.gbs)}};
    for (Index i = 0; i < r.confusion.rows(); ++i)
        for (Index j = 0; j < r.confusion.cols(); ++j)
            rows.emplace_back("confusion[" + classes[static_cast<std::size_t>(i)] + "->" +
                                  classes[static_cast<std::size_t>(j)] + "]",
                              std::to_string(r.confusion(i, j)));
    return rows;
}

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
    int example = 1;
    Index n_train = 100;
    Index n_test = 200;
    Index features = 100;
    std::uint64_t seed = 0;
    std::string label_rule = "argmax";
    std::string train_out;
    std::string test_out;

    void add(CLI::App* app) {
        app->add_option("--example", example, "Simulation design, 1 or 2")
            ->check(CLI::IsMember({1, 2}))
            ->capture_default_str();
        app->add_option("--n-train", n_train)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--n-test", n_test)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--features", features)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--seed", seed)->capture_default_str();
        app->add_option("--label-rule", label_rule)
            ->check(CLI::IsMember({"argmax", "categorical"}))
            ->capture_default_str();
        app->add_option("--train", train_out, "Training CSV output")->required();
        app->add_option("--test", test_out, "Test CSV output");
    }

    SimDesign design() const {
        SimDesign d;
        d.n_train = n_train;
        d.n_test = n_test;
        d.d = features;
        d.seed = seed;
        d.correlation_mode = example == 2 ? CorrelationMode::Example2 : CorrelationMode::Independent;
        d.label_rule = label_rule == "categorical" ? LabelRule::Categorical : LabelRule::Argmax;
        return d;
    }

    int run(std::ostream& out) const {
        echo(out, "simulate",
             {{"example", example}, {"n_train", n_train}, {"n_test", n_test}, {"features", features},
              {"seed", seed}, {"label_rule", label_rule}, {"train", train_out}, {"test", test_out}});
        SimData sim = generate(design());
        std::ostringstream train;
        write_dataset_csv(train, sim.train);
        write_file(train_out, train.str());
        if (!test_out.empty()) {
            std::ostringstream test;
            write_dataset_csv(test, sim.test);
            write_file(test_out, test.str());
        }
        out << "wrote " << sim.train.sample_count() << " training samples"
            << (test_out.empty() ? "" : " and " + std::to_string(sim.test.sample_count()) + " test samples")
            << '\n';
        return 0;
    }
};

// --------------------------------------------------------------------- fit

struct FitCmd {
    DataFlags data;
    PathFlags path;
    bool meta = false;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string report_path;

    void add(CLI::App* app) {
        data.add(app);
        path.add(app);
        app->add_flag("--meta", meta, "Meta-TGDR across studies (needs --study-col)");
        app->add_option("--seed", seed)->capture_default_str();
        app->add_option("--out", out_path, "Model file output")->required();
        app->add_option("--report", report_path, "Fit report CSV output");
    }

    int run(std::ostream& out) const {
        TgdrConfig config = path.config(seed);
        json resolved = data.to_json();
        resolved["config"] = json::parse(config_json(config));
        resolved["meta"] = meta;
        resolved["out"] = out_path;
        resolved["report"] = report_path;
        echo(out, "fit", resolved);
        require(!meta || !data.study_col.empty(), ErrorCode::InvalidArgument,
                "--meta needs --study-col");

        LoadedDataset loaded = load_dataset(data.data, data.options());
        const ExpressionDataset& ds = loaded.data;
        const Fitter fitter = meta ? Fitter::Meta : Fitter::Tgdr;
        ModelCoefficients coeffs = fit_final(fitter, ds, config);

        ModelFile model;
        model.mode = meta ? ModelMode::Meta : ds.class_count == 2 ? ModelMode::Tgdr : ModelMode::Multi;
        model.class_names = ds.class_names;
        model.feature_names = ds.feature_names;
        model.study_names = meta ? ds.study_names : std::vector<std::string>{};
        model.coefficients = coeffs;
        model.config = config;
        model.seed = seed;
        save_model(out_path, model);

        auto p = predict_dataset(fitter, coeffs, ds);
        auto eval = evaluate(p.probabilities, ds.labels);
        std::vector<std::string> active;
        const auto mask = coeffs.active_set(config.selection_tolerance);
        for (std::size_t j = 0; j < mask.size(); ++j)
            if (mask[j]) active.push_back(ds.feature_names[j]);
        std::vector<std::pair<std::string, std::string>> rows{
            {"mode", std::string(model_mode_name(model.mode))},
            {"n", std::to_string(ds.sample_count())},
            {"training_error_pct", format_double(eval.error_pct)},
            {"training_gbs", format_double(eval.gbs)},
            {"active_count", std::to_string(active.size())},
            {"active_features", join(active, ';')}};
        if (!report_path.empty()) write_file(report_path, key_value_csv(rows));
        out << "fit report\n";
        print_key_values(out, rows);
        return 0;
    }
};

// ---------------------------------------------------------------------- cv

struct CvCmd {
    DataFlags data;
    PathFlags path;
    std::vector<double> tau_grid = CvOptions::default_tau_grid();
    int folds = 5;
    int stride = 10;
    bool meta = false;
    bool unstratified = false;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_path;
    std::string best_path;
    std::string folds_path;

    void add(CLI::App* app) {
        data.add(app);
        path.add(app, false, true);
        app->add_option("--tau-grid", tau_grid, "Comma-separated tau values")->delimiter(',')->capture_default_str();
        app->add_option("--folds", folds)->check(CLI::Range(2, 1 << 30))->capture_default_str();
        app->add_option("--stride", stride, "Evaluate k every stride steps")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_flag("--meta", meta, "Meta-TGDR across studies (needs --study-col)");
        app->add_flag("--unstratified", unstratified, "Plain random folds");
        app->add_option("--seed", seed)->capture_default_str();
        app->add_option("--jobs", jobs)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--out", out_path, "Grid CSV output")->required();
        app->add_option("--best-config", best_path, "Chosen configuration (JSON) output");
        app->add_option("--folds-out", folds_path, "Fold assignment CSV output");
    }

    int run(std::ostream& out) const {
        CvOptions o;
        o.tau_grid = tau_grid;
        o.max_steps = path.steps;
        o.folds = folds;
        o.stride = stride;
        o.seed = seed;
        o.fitter = meta ? Fitter::Meta : Fitter::Tgdr;
        o.stratified = !unstratified;
        o.jobs = jobs;
        o.base = path.config(seed);
        json resolved = data.to_json();
        resolved.update({{"tau_grid", tau_grid}, {"steps", path.steps}, {"folds", folds},
                         {"stride", stride}, {"meta", meta}, {"stratified", !unstratified},
                         {"seed", seed}, {"jobs", jobs}, {"out", out_path},
                         {"best_config", best_path}, {"folds_out", folds_path},
                         {"base_config", json::parse(config_json(o.base))}});
        echo(out, "cv", resolved);
        require(!meta || !data.study_col.empty(), ErrorCode::InvalidArgument,
                "--meta needs --study-col");

        LoadedDataset loaded = load_dataset(data.data, data.options());
        CvResult r = k_fold_cv(loaded.data, o);

        std::ostringstream grid;
        grid << "tau,k,error_pct,gbs\n";
        for (const auto& g : r.grid)
            grid << format_double(g.tau) << ',' << g.k << ',' << format_double(g.error_pct) << ','
                 << format_double(g.gbs) << '\n';
        write_file(out_path, grid.str());
        if (!best_path.empty()) write_file(best_path, config_json(r.best_config(o.base)) + "\n");
        if (!folds_path.empty()) {
            std::ostringstream f;
            f << "sample,fold\n";
            for (std::size_t i = 0; i < r.fold_assignment.size(); ++i)
                f << loaded.sample_ids[i] << ',' << r.fold_assignment[i] + 1 << '\n';
            write_file(folds_path, f.str());
        }
        out << "cross-validation (" << folds << " folds)\n";
        print_key_values(out, {{"best_tau", format_double(r.best.tau)},
                               {"best_k", std::to_string(r.best.k)},
                               {"cv_error_pct", format_double(r.best.error_pct)},
                               {"cv_gbs", format_double(r.best.gbs)},
                               {"min_grid_error_pct", format_double(r.min_error_pct)}});
        return 0;
    }
};

// --------------------------------------------------------------------- bag

struct BagCmd {
    DataFlags data;
    PathFlags path;
    int bootstrap = 100;
    std::vector<double> cutoffs = default_cutoff_grid();
    bool meta = false;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_path;
    std::string report_path;
    std::string cutoffs_path;

    void add(CLI::App* app) {
        data.add(app);
        path.add(app);
        app->add_option("--bootstrap", bootstrap, "Number of bootstrap resamples")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_option("--cutoffs", cutoffs, "Bagging-frequency cutoff grid")->delimiter(',')->capture_default_str();
        app->add_flag("--meta", meta, "Meta-TGDR across studies (needs --study-col)");
        app->add_option("--seed", seed)->capture_default_str();
        app->add_option("--jobs", jobs)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--out", out_path, "Bagged model file output")->required();
        app->add_option("--report", report_path, "Per-feature bagging frequency CSV output");
        app->add_option("--cutoff-report", cutoffs_path, "Per-cutoff evaluation CSV output");
    }

    int run(std::ostream& out) const {
        TgdrConfig config = path.config(seed);
        json resolved = data.to_json();
        resolved.update({{"config", json::parse(config_json(config))}, {"bootstrap", bootstrap},
                         {"cutoffs", cutoffs}, {"meta", meta}, {"seed", seed}, {"jobs", jobs},
                         {"out", out_path}, {"report", report_path}, {"cutoff_report", cutoffs_path}});
        echo(out, "bag", resolved);
        require(!meta || !data.study_col.empty(), ErrorCode::InvalidArgument,
                "--meta needs --study-col");

        LoadedDataset loaded = load_dataset(data.data, data.options());
        const ExpressionDataset& ds = loaded.data;
        BaggingOptions o;
        o.n_bootstrap = bootstrap;
        o.fitter = meta ? Fitter::Meta : Fitter::Tgdr;
        o.seed = seed;
        o.jobs = jobs;
        o.keep_members = false;
        BaggingReport report = bagging_run(ds, config, o);
        CutoffSelection sel = select_cutoff(report, ds, cutoffs);

        ModelFile model;
        model.mode = ModelMode::Bagged;
        model.class_names = ds.class_names;
        model.feature_names = ds.feature_names;
        model.study_names = meta ? ds.study_names : std::vector<std::string>{};
        model.coefficients = sel.final_model;
        model.bagging = BaggingSection{report.n_bootstrap, report.n_succeeded, report.frequencies,
                                       sel.cutoff, o.fitter};
        model.config = config;
        model.seed = seed;
        save_model(out_path, model);

        const auto final_active = sel.final_model.active_set(config.selection_tolerance);
        if (!report_path.empty()) {
            std::ostringstream s;
            s << "feature,frequency,count,in_final_model\n";
            for (Index j = 0; j < ds.feature_count(); ++j)
                s << ds.feature_names[j] << ',' << format_double(report.frequencies(j)) << ','
                  << report.selection_counts[static_cast<std::size_t>(j)] << ','
                  << (final_active[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
            write_file(report_path, s.str());
        }
        if (!cutoffs_path.empty()) {
            std::ostringstream s;
            s << "cutoff,kept_features,model_size,error_pct,gbs,skipped\n";
            for (const auto& c : sel.candidates)
                s << format_double(c.cutoff) << ',' << c.kept_features << ',' << c.model_size << ','
                  << format_double(c.error_pct) << ',' << format_double(c.gbs) << ','
                  << (c.skipped ? 1 : 0) << '\n';
            write_file(cutoffs_path, s.str());
        }
        out << "bagging\n";
        print_key_values(out, {{"bootstrap", std::to_string(report.n_bootstrap)},
                               {"failed", std::to_string(report.failures.size())},
                               {"cutoff", format_double(sel.cutoff)},
                               {"final_size", std::to_string(sel.final_model.active_count(
                                                  config.selection_tolerance))}});
        return 0;
    }
};

// -------------------------------------------------------------------- pool

struct PoolCmd {
    DataFlags data;
    std::string model_path;
    bool paper_literal = false;
    std::string out_path;

    void add(CLI::App* app) {
        data.add(app);
        app->add_option("--model", model_path, "Meta model file")->required();
        app->add_flag("--paper-literal-variance", paper_literal,
                      "Use S/(p(1-p)^2) instead of S/(p(1-p))^2");
        app->add_option("--out", out_path, "Pooled model file output")->required();
    }

    int run(std::ostream& out) const {
        json resolved = data.to_json();
        resolved.update({{"model", model_path}, {"paper_literal_variance", paper_literal},
                         {"out", out_path}});
        echo(out, "pool", resolved);
        ModelFile meta = load_model(model_path);
        require(meta.mode == ModelMode::Meta, ErrorCode::IncompatibleModel,
                "pool needs a meta model, got mode '" + std::string(model_mode_name(meta.mode)) + "'");
        require(!data.study_col.empty(), ErrorCode::InvalidArgument, "pool needs --study-col");
        DatasetOptions opts = data.options();
        opts.class_order = meta.class_names;
        LoadedDataset loaded = load_dataset(data.data, opts);
        ExpressionDataset ds = loaded.data;
        ds.features = align_features(ds, meta.feature_names);
        ds.feature_names = meta.feature_names;
        ds.study_ids = align_studies(ds, meta.study_names);
        ds.study_count = static_cast<int>(meta.study_names.size());
        ds.study_names = meta.study_names;

        PoolingOptions po;
        po.formula = paper_literal ? VarianceFormula::PaperLiteral : VarianceFormula::Delta;
        po.selection_tolerance = meta.config.selection_tolerance;
        PooledModel pooled = pool_coefficients(meta.coefficients, ds, po);

        ModelFile model = meta;
        model.mode = ModelMode::Pooled;
        model.coefficients = pooled.overall;
        model.pooled = PooledSection{pooled.sigma2, pooled.formula, pooled.underdetermined,
                                     pooled.uniform_weights, pooled.source};
        save_model(out_path, model);
        out << "pooled " << meta.study_names.size() << " studies\n";
        for (Index k = 0; k < pooled.sigma2.rows(); ++k)
            for (Index m = 0; m < pooled.sigma2.cols(); ++m)
                out << "  sigma2[" << meta.class_names[static_cast<std::size_t>(k)] << ", "
                    << meta.study_names[static_cast<std::size_t>(m)]
                    << "] = " << format_double(pooled.sigma2(k, m)) << '\n';
        for (const auto& w : pooled.warnings) out << "warning: " << w << '\n';
        return 0;
    }
};

// ----------------------------------------------------------------- predict

struct PredictCmd {
    DataFlags data;
    std::string model_path;
    std::string out_path;

    void add(CLI::App* app) {
        data.add(app);
        app->add_option("--model", model_path, "Model file")->required();
        app->add_option("--out", out_path, "Predictions CSV output")->required();
    }

    int run(std::ostream& out) const {
        json resolved = data.to_json();
        resolved.update({{"model", model_path}, {"out", out_path}});
        echo(out, "predict", resolved);
        ModelFile model = load_model(model_path);
        DatasetOptions opts = data.options();
        opts.class_order = model.class_names;
        opts.labels_required = false;
        LoadedDataset loaded = load_dataset(data.data, opts);
        const ExpressionDataset& ds = loaded.data;
        Eigen::MatrixXd x = align_features(ds, model.feature_names);
        std::vector<int> studies;
        if (uses_study_blocks(model)) {
            require(!data.study_col.empty(), ErrorCode::InvalidArgument,
                    "a meta model predicts per study; pass --study-col or pool the model");
            studies = align_studies(ds, model.study_names);
        }
        Prediction p = predict(model.coefficients, x, studies);
        write_file(out_path, predictions_csv(loaded.sample_ids, p, model.class_names));
        out << "predicted " << ds.sample_count() << " samples\n";
        if (loaded.has_labels) print_key_values(out, evaluation_rows(evaluate(p.probabilities, ds.labels), model.class_names));
        return 0;
    }
};

// ---------------------------------------------------------------- evaluate

struct EvaluateCmd {
    std::string predictions_path;
    DataFlags data;
    std::string out_path;

    void add(CLI::App* app) {
        app->add_option("--predictions", predictions_path, "Predictions CSV from `predict`")->required();
        data.add(app);
        app->add_option("--out", out_path, "Evaluation report CSV output");
    }

    int run(std::ostream& out) const {
        json resolved = data.to_json();
        resolved.update({{"predictions", predictions_path}, {"out", out_path}});
        echo(out, "evaluate", resolved);

        std::ifstream in(predictions_path);
        require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + predictions_path + "'");
        std::string line;
        require(static_cast<bool>(std::getline(in, line)), ErrorCode::Parse,
                predictions_path + ": empty file");
        std::vector<std::string> header;
        {
            std::stringstream s(line);
            std::string cell;
            while (std::getline(s, cell, ',')) header.push_back(cell);
        }
        std::vector<std::string> classes;
        std::vector<std::size_t> prob_cols;
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c].rfind("prob_", 0) == 0) {
                classes.push_back(header[c].substr(5));
                prob_cols.push_back(c);
            }
        require(classes.size() >= 2, ErrorCode::Parse, predictions_path + ": no probability columns");
        std::vector<std::vector<double>> rows;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream s(line);
            std::string cell;
            while (std::getline(s, cell, ',')) cells.push_back(cell);
            require(cells.size() == header.size(), ErrorCode::Parse,
                    predictions_path + ": line " + std::to_string(line_no) + " has the wrong field count");
            std::vector<double> probs;
            for (std::size_t c : prob_cols) {
                char* end = nullptr;
                const double v = std::strtod(cells[c].c_str(), &end);
                require(end && *end == '\0' && !cells[c].empty(), ErrorCode::Parse,
                        predictions_path + ": line " + std::to_string(line_no) + ": bad probability");
                probs.push_back(v);
            }
            rows.push_back(std::move(probs));
        }

        DatasetOptions opts = data.options();
        opts.class_order = classes;
        LoadedDataset loaded = load_dataset(data.data, opts);
        require(static_cast<Index>(rows.size()) == loaded.data.sample_count(), ErrorCode::DimMismatch,
                "predictions have " + std::to_string(rows.size()) + " rows, data has " +
                    std::to_string(loaded.data.sample_count()));
        Eigen::MatrixXd p(static_cast<Index>(rows.size()), static_cast<Index>(classes.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t k = 0; k < classes.size(); ++k) p(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
        auto rows_out = evaluation_rows(evaluate(p, loaded.data.labels), classes);
        if (!out_path.empty()) write_file(out_path, key_value_csv(rows_out));
        out << "evaluation\n";
        print_key_values(out, rows_out);
        return 0;
    }
};

// -------------------------------------------------------- replicate-table1

struct ReplicateCmd {
    SimulateCmd sim;
    int replicates = 50;
    std::vector<double> tau_grid = CvOptions::default_tau_grid();
    int steps = 500;
    int folds = 5;
    int stride = 10;
    int bootstrap = 100;
    std::vector<double> cutoffs{0.4, 0.8};
    double delta_v = 0.01;
    int jobs = 1;
    std::string out_path;
    std::string replicates_path;

    void add(CLI::App* app) {
        app->add_option("--example", sim.example)->check(CLI::IsMember({1, 2}))->capture_default_str();
        app->add_option("--replicates", replicates)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--n-train", sim.n_train)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--n-test", sim.n_test)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--features", sim.features)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--label-rule", sim.label_rule)
            ->check(CLI::IsMember({"argmax", "categorical"}))
            ->capture_default_str();
        app->add_option("--tau-grid", tau_grid)->delimiter(',')->capture_default_str();
        app->add_option("--steps", steps, "CV step budget")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--folds", folds)->check(CLI::Range(2, 1 << 30))->capture_default_str();
        app->add_option("--stride", stride)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--bootstrap", bootstrap)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--cutoffs", cutoffs)->delimiter(',')->capture_default_str();
        app->add_option("--delta-v", delta_v)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--seed", sim.seed)->capture_default_str();
        app->add_option("--jobs", jobs)->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--out", out_path, "Summary CSV output")->required();
        app->add_option("--replicates-out", replicates_path, "Per-replicate CSV output");
    }

    int run(std::ostream& out) const {
        Table1Options o;
        o.n_datasets = replicates;
        o.design = sim.design();
        o.tau_grid = tau_grid;
        o.max_steps = steps;
        o.folds = folds;
        o.stride = stride;
        o.n_bootstrap = bootstrap;
        o.cutoffs = cutoffs;
        o.base.delta_v = delta_v;
        o.seed = sim.seed;
        o.jobs = jobs;
        echo(out, "replicate-table1",
             {{"example", sim.example}, {"replicates", replicates}, {"n_train", sim.n_train},
              {"n_test", sim.n_test}, {"features", sim.features}, {"label_rule", sim.label_rule},
              {"tau_grid", tau_grid}, {"steps", steps}, {"folds", folds}, {"stride", stride},
              {"bootstrap", bootstrap}, {"cutoffs", cutoffs}, {"delta_v", delta_v},
              {"seed", sim.seed}, {"jobs", jobs}, {"out", out_path},
              {"replicates_out", replicates_path}});
        Table1Summary summary = replicate_table1(o);
        std::ostringstream csv;
        write_table1_csv(csv, summary);
        write_file(out_path, csv.str());
        if (!replicates_path.empty()) {
            std::ostringstream reps;
            write_replicates_csv(reps, summary);
            write_file(replicates_path, reps.str());
        }
        write_table1_text(out, summary);
        return 0;
    }
};

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Threshold gradient descent regularization for multi-class and multi-study classification", "tgdr"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file");

    SimulateCmd simulate;
    FitCmd fit_cmd;
    CvCmd cv;
    BagCmd bag;
    PoolCmd pool;
    PredictCmd predict_cmd;
    EvaluateCmd evaluate_cmd;
    ReplicateCmd replicate;

    auto* s_sim = app.add_subcommand("simulate", "Generate a simulated dataset");
    simulate.add(s_sim);
    auto* s_fit = app.add_subcommand("fit", "Fit a TGDR, multi-TGDR or Meta-TGDR model");
    fit_cmd.add(s_fit);
    auto* s_cv = app.add_subcommand("cv", "Cross-validate tau and the number of steps");
    cv.add(s_cv);
    auto* s_bag = app.add_subcommand("bag", "Bagging frequencies, cutoff selection and refit");
    bag.add(s_bag);
    auto* s_pool = app.add_subcommand("pool", "Pool a meta model for prediction on new studies");
    pool.add(s_pool);
    auto* s_predict = app.add_subcommand("predict", "Predict class probabilities and labels");
    predict_cmd.add(s_predict);
    auto* s_eval = app.add_subcommand("evaluate", "Error, GBS and confusion matrix of predictions");
    evaluate_cmd.add(s_eval);
    auto* s_rep = app.add_subcommand("replicate-table1", "Simulation study summary");
    replicate.add(s_rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: USAGE: " << e.what() << '\n';
        return 2;
    }

    try {
        if (s_sim->parsed()) return simulate.run(out);
        if (s_fit->parsed()) return fit_cmd.run(out);
        if (s_cv->parsed()) return cv.run(out);
        if (s_bag->parsed()) return bag.run(out);
        if (s_pool->parsed()) return pool.run(out);
        if (s_predict->parsed()) return predict_cmd.run(out);
        if (s_eval->parsed()) return evaluate_cmd.run(out);
        if (s_rep->parsed()) return replicate.run(out);
    } catch (const Error& e) {
        err << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: INTERNAL: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tgdr::cli
