#include "tgdr/bagging.hpp"
#include "tgdr/error.hpp"
#include "tgdr/fitter.hpp"
#include "tgdr/io.hpp"
#include "tgdr/meta.hpp"
#include "tgdr/selection.hpp"
#include "tgdr/simgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tgdr;

namespace {

ExpressionDataset to_dataset(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                             std::vector<int> studies) {
    return make_dataset(x, y, classes, std::move(studies));
}

py::dict model_dict(const ModelCoefficients& c, double tol) {
    py::dict d;
    d["intercepts"] = c.intercepts;
    py::list betas;
    for (const auto& b : c.betas) betas.append(b);
    d["betas"] = betas;
    if (c.standardization) {
        d["mean"] = c.standardization->mean;
        d["sd"] = c.standardization->sd;
    }
    std::vector<int> active;
    const auto mask = c.active_set(tol);
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) active.push_back(static_cast<int>(j));
    d["active"] = active;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Threshold gradient descent regularization for multi-class and multi-study data";

    static py::exception<Error> tgdr_error(m, "TgdrError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(tgdr_error,
                          (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::enum_<Fitter>(m, "Fitter").value("TGDR", Fitter::Tgdr).value("META", Fitter::Meta);
    py::enum_<VarianceFormula>(m, "VarianceFormula")
        .value("DELTA", VarianceFormula::Delta)
        .value("PAPER_LITERAL", VarianceFormula::PaperLiteral);

    py::class_<TgdrConfig>(m, "Config")
        .def(py::init<>())
        .def_readwrite("tau", &TgdrConfig::tau)
        .def_readwrite("delta_v", &TgdrConfig::delta_v)
        .def_readwrite("max_steps", &TgdrConfig::max_steps)
        .def_readwrite("tau_per_class", &TgdrConfig::tau_per_class)
        .def_readwrite("standardize", &TgdrConfig::standardize)
        .def_readwrite("selection_tolerance", &TgdrConfig::selection_tolerance)
        .def_readwrite("allowed_features", &TgdrConfig::allowed_features);

    py::class_<ModelCoefficients>(m, "Model")
        .def_readonly("intercepts", &ModelCoefficients::intercepts)
        .def_readonly("betas", &ModelCoefficients::betas)
        .def("active_set", &ModelCoefficients::active_set, py::arg("tolerance") = 1e-12)
        .def("active_count", &ModelCoefficients::active_count, py::arg("tolerance") = 1e-12)
        .def("to_dict", &model_dict, py::arg("tolerance") = 1e-12);

    m.def(
        "simulate",
        [](int example, Index n_train, Index n_test, Index d, std::uint64_t seed, bool categorical) {
            SimDesign design;
            design.n_train = n_train;
            design.n_test = n_test;
            design.d = d;
            design.correlation_mode = example == 2 ? CorrelationMode::Example2 : CorrelationMode::Independent;
            design.label_rule = categorical ? LabelRule::Categorical : LabelRule::Argmax;
            design.seed = seed;
            auto sim = generate(design);
            return py::make_tuple(sim.train.features, sim.train.labels, sim.test.features, sim.test.labels);
        },
        py::arg("example") = 1, py::arg("n_train") = 100, py::arg("n_test") = 200, py::arg("features") = 100,
        py::arg("seed") = 0, py::arg("categorical") = false,
        "Simulated (x_train, y_train, x_test, y_test) with labels in 1..3.");

    m.def(
        "fit",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, const TgdrConfig& config,
           std::vector<int> studies, Fitter fitter) {
            py::gil_scoped_release release;
            return fit_final(fitter, to_dataset(x, y, classes, std::move(studies)), config);
        },
        py::arg("x"), py::arg("y"), py::arg("classes"), py::arg("config") = TgdrConfig{},
        py::arg("studies") = std::vector<int>{}, py::arg("fitter") = Fitter::Tgdr);

    m.def(
        "predict",
        [](const ModelCoefficients& model, const Eigen::MatrixXd& x, const std::vector<int>& studies) {
            auto p = predict(model, x, studies);
            return py::make_tuple(p.labels, p.probabilities);
        },
        py::arg("model"), py::arg("x"), py::arg("studies") = std::vector<int>{},
        "Returns (labels, probabilities).");

    m.def(
        "cross_validate",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, std::vector<double> tau_grid,
           int max_steps, int folds, int stride, std::uint64_t seed, std::vector<int> studies, Fitter fitter,
           int jobs) {
            CvOptions o;
            if (!tau_grid.empty()) o.tau_grid = std::move(tau_grid);
            o.max_steps = max_steps;
            o.folds = folds;
            o.stride = stride;
            o.seed = seed;
            o.fitter = fitter;
            o.jobs = jobs;
            CvResult r;
            {
                py::gil_scoped_release release;
                r = k_fold_cv(to_dataset(x, y, classes, std::move(studies)), o);
            }
            py::dict d;
            d["tau"] = r.best.tau;
            d["k"] = r.best.k;
            d["error_pct"] = r.best.error_pct;
            d["gbs"] = r.best.gbs;
            py::list grid;
            for (const auto& g : r.grid) grid.append(py::make_tuple(g.tau, g.k, g.error_pct, g.gbs));
            d["grid"] = grid;
            d["config"] = r.best_config(TgdrConfig{});
            return d;
        },
        py::arg("x"), py::arg("y"), py::arg("classes"), py::arg("tau_grid") = std::vector<double>{},
        py::arg("max_steps") = 1000, py::arg("folds") = 5, py::arg("stride") = 10, py::arg("seed") = 0,
        py::arg("studies") = std::vector<int>{}, py::arg("fitter") = Fitter::Tgdr, py::arg("jobs") = 1);

    m.def(
        "bagging",
        [](const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, const TgdrConfig& config,
           int n_bootstrap, std::uint64_t seed, std::vector<double> cutoffs, std::vector<int> studies,
           Fitter fitter, int jobs) {
            auto data = to_dataset(x, y, classes, std::move(studies));
            BaggingOptions o;
            o.n_bootstrap = n_bootstrap;
            o.seed = seed;
            o.fitter = fitter;
            o.jobs = jobs;
            o.keep_members = false;
            BaggingReport report;
            CutoffSelection sel;
            {
                py::gil_scoped_release release;
                report = bagging_run(data, config, o);
                sel = select_cutoff(report, data, cutoffs.empty() ? default_cutoff_grid() : cutoffs);
            }
            py::dict d;
            d["frequencies"] = report.frequencies;
            d["succeeded"] = report.n_succeeded;
            d["cutoff"] = sel.cutoff;
            d["model"] = sel.final_model;
            return d;
        },
        py::arg("x"), py::arg("y"), py::arg("classes"), py::arg("config") = TgdrConfig{},
        py::arg("n_bootstrap") = 100, py::arg("seed") = 0, py::arg("cutoffs") = std::vector<double>{},
        py::arg("studies") = std::vector<int>{}, py::arg("fitter") = Fitter::Tgdr, py::arg("jobs") = 1);

    m.def(
        "pool",
        [](const ModelCoefficients& model, const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
           std::vector<int> studies, VarianceFormula formula) {
            PoolingOptions o;
            o.formula = formula;
            auto p = pool_coefficients(model, to_dataset(x, y, classes, std::move(studies)), o);
            return py::make_tuple(p.overall, p.sigma2);
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("classes"), py::arg("studies"),
        py::arg("formula") = VarianceFormula::Delta, "Returns (overall_model, sigma2).");

    m.def(
        "gbs", [](const Eigen::MatrixXd& p, const std::vector<int>& y) { return gbs(p, y); },
        py::arg("probabilities"), py::arg("labels"));

    m.def(
        "save_model",
        [](const ModelCoefficients& c, const std::string& path, int classes) {
            ModelFile f;
            f.mode = c.intercepts.rows() > 1 ? ModelMode::Meta : (classes > 2 ? ModelMode::Multi : ModelMode::Tgdr);
            for (int k = 1; k <= classes; ++k) f.class_names.push_back(std::to_string(k));
            for (Index j = 0; j < c.feature_count(); ++j) f.feature_names.push_back("X" + std::to_string(j + 1));
            for (Index s = 0; s < c.intercepts.rows(); ++s) f.study_names.push_back(std::to_string(s + 1));
            f.coefficients = c;
            save_model(path, f);
        },
        py::arg("model"), py::arg("path"), py::arg("classes"));
    m.def(
        "load_model", [](const std::string& path) { return load_model(path).coefficients; }, py::arg("path"));
}
