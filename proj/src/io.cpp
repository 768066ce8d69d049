#include "tgdr/io.hpp"

#include "tgdr/error.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tgdr {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            fields.push_back(trim(std::string_view(line).substr(start)));
            return fields;
        }
        fields.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

LoadedDataset parse_dataset(std::istream& in, const DatasetOptions& options,
                            std::string_view source) {
    const std::string where(source);
    std::string header;
    while (std::getline(in, header) && blank(header)) {
    }
    require(!header.empty() && !blank(header), ErrorCode::Parse, where + ": empty file");
    const char delim = options.delimiter ? options.delimiter
                                         : (header.find('\t') != std::string::npos ? '\t' : ',');
    const auto columns = split(header, delim);

    int label_idx = -1, study_idx = -1, id_idx = -1;
    std::vector<int> feature_idx;
    std::vector<std::string> feature_names;
    std::set<std::string> seen;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& name = columns[c];
        if (name == options.label_col) {
            label_idx = static_cast<int>(c);
        } else if (options.study_col && name == *options.study_col) {
            study_idx = static_cast<int>(c);
        } else if (options.id_col && name == *options.id_col) {
            id_idx = static_cast<int>(c);
        } else {
            require(seen.insert(name).second, ErrorCode::Parse,
                    where + ": duplicate feature name '" + name + "'");
            feature_idx.push_back(static_cast<int>(c));
            feature_names.push_back(name);
        }
    }
    require(label_idx >= 0 || !options.labels_required, ErrorCode::Parse,
            where + ": missing label column '" + options.label_col + "'");
    require(!options.study_col || study_idx >= 0, ErrorCode::Parse,
            where + ": missing study column '" + options.study_col.value_or("") + "'");
    require(!options.id_col || id_idx >= 0, ErrorCode::Parse,
            where + ": missing id column '" + options.id_col.value_or("") + "'");
    require(!feature_idx.empty(), ErrorCode::Parse, where + ": no feature columns");
    require(label_idx >= 0 || !options.class_order.empty(), ErrorCode::InvalidArgument,
            where + ": unlabeled data needs an explicit class order");

    std::map<std::string, int> class_map;
    std::vector<std::string> class_names = options.class_order;
    for (std::size_t k = 0; k < class_names.size(); ++k) {
        require(class_map.emplace(class_names[k], static_cast<int>(k) + 1).second,
                ErrorCode::InvalidArgument, "duplicate class '" + class_names[k] + "'");
    }
    const bool fixed_classes = !class_names.empty();
    std::map<std::string, int> study_map;
    std::vector<std::string> study_names;

    std::vector<double> values;
    std::vector<int> labels, studies;
    std::vector<std::string> ids;
    std::string line;
    std::size_t line_no = 1;
    Index rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto fields = split(line, delim);
        require(fields.size() == columns.size(), ErrorCode::Parse,
                where + ": line " + std::to_string(line_no) + " has " +
                    std::to_string(fields.size()) + " fields, header has " +
                    std::to_string(columns.size()));
        for (std::size_t f = 0; f < feature_idx.size(); ++f) {
            const auto& cell = fields[static_cast<std::size_t>(feature_idx[f])];
            const char* begin = cell.c_str();
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            const bool ok = !cell.empty() && end == begin + cell.size() && errno != ERANGE &&
                            std::isfinite(v);
            require(ok, ErrorCode::Parse,
                    where + ": row " + std::to_string(line_no) + ", column " +
                        std::to_string(feature_idx[f] + 1) + " ('" + feature_names[f] +
                        "'): non-numeric or non-finite value '" + cell + "'");
            values.push_back(v);
        }
        if (label_idx >= 0) {
            const auto& lab = fields[static_cast<std::size_t>(label_idx)];
            auto it = class_map.find(lab);
            if (it == class_map.end()) {
                require(!fixed_classes, ErrorCode::Parse,
                        where + ": row " + std::to_string(line_no) + ": unknown class '" + lab + "'");
                class_names.push_back(lab);
                it = class_map.emplace(lab, static_cast<int>(class_names.size())).first;
            }
            labels.push_back(it->second);
        } else {
            labels.push_back(1);
        }
        if (study_idx >= 0) {
            const auto& s = fields[static_cast<std::size_t>(study_idx)];
            auto it = study_map.find(s);
            if (it == study_map.end()) {
                study_names.push_back(s);
                it = study_map.emplace(s, static_cast<int>(study_names.size())).first;
            }
            studies.push_back(it->second);
        } else {
            studies.push_back(1);
        }
        ids.push_back(id_idx >= 0 ? fields[static_cast<std::size_t>(id_idx)]
                                  : std::to_string(rows + 1));
        ++rows;
    }
    require(rows > 0, ErrorCode::Parse, where + ": no data rows");
    require(class_names.size() >= 2, ErrorCode::InvalidArgument,
            where + ": need at least two classes, found " + std::to_string(class_names.size()));

    const Index d = static_cast<Index>(feature_idx.size());
    Eigen::MatrixXd x(rows, d);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < d; ++j) x(i, j) = values[static_cast<std::size_t>(i * d + j)];

    LoadedDataset loaded;
    loaded.data = make_dataset(std::move(x), std::move(labels), static_cast<int>(class_names.size()),
                               std::move(studies), std::move(feature_names));
    loaded.data.class_names = std::move(class_names);
    loaded.data.study_names = study_idx >= 0 ? std::move(study_names) : std::vector<std::string>{"1"};
    loaded.sample_ids = std::move(ids);
    loaded.has_labels = label_idx >= 0;
    return loaded;
}

LoadedDataset load_dataset(const std::filesystem::path& path, const DatasetOptions& options) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
    return parse_dataset(in, options, path.string());
}

void write_dataset_csv(std::ostream& out, const ExpressionDataset& data) {
    for (const auto& name : data.feature_names) out << name << ',';
    if (data.study_count > 1) out << "study,";
    out << "label\n";
    for (Index i = 0; i < data.sample_count(); ++i) {
        for (Index j = 0; j < data.feature_count(); ++j) out << format_double(data.features(i, j)) << ',';
        if (data.study_count > 1) out << data.study_ids[static_cast<std::size_t>(i)] << ',';
        out << data.class_name(data.labels[static_cast<std::size_t>(i)]) << '\n';
    }
}

std::string_view model_mode_name(ModelMode mode) {
    switch (mode) {
    case ModelMode::Tgdr: return "tgdr";
    case ModelMode::Multi: return "multi";
    case ModelMode::Meta: return "meta";
    case ModelMode::Pooled: return "pooled";
    case ModelMode::Bagged: return "bagged";
    }
    return "tgdr";
}

ModelMode parse_model_mode(std::string_view name) {
    for (auto m : {ModelMode::Tgdr, ModelMode::Multi, ModelMode::Meta, ModelMode::Pooled,
                   ModelMode::Bagged})
        if (model_mode_name(m) == name) return m;
    fail(ErrorCode::Parse, "unknown model mode '" + std::string(name) + "'");
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Index cols_if_empty = 0) {
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j.at(0).size()) : cols_if_empty;
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        require(static_cast<Index>(row.size()) == cols, ErrorCode::Parse, "ragged matrix in model file");
        for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

json coefficients_to_json(const ModelCoefficients& c) {
    json j;
    j["intercepts"] = matrix_to_json(c.intercepts);
    json betas = json::array();
    for (const auto& b : c.betas) betas.push_back(matrix_to_json(b));
    j["betas"] = std::move(betas);
    if (c.standardization) {
        j["standardization"] = {{"mean", vector_to_json(c.standardization->mean)},
                                {"sd", vector_to_json(c.standardization->sd)}};
    } else {
        j["standardization"] = nullptr;
    }
    return j;
}

ModelCoefficients coefficients_from_json(const json& j) {
    ModelCoefficients c;
    c.intercepts = matrix_from_json(j.at("intercepts"));
    for (const auto& b : j.at("betas")) c.betas.push_back(matrix_from_json(b));
    const auto& s = j.at("standardization");
    if (!s.is_null()) {
        Standardization st;
        st.mean = vector_from_json(s.at("mean"));
        st.sd = vector_from_json(s.at("sd"));
        c.standardization = std::move(st);
    }
    c.validate();
    return c;
}

json config_to_json(const TgdrConfig& c) {
    json j;
    j["tau"] = c.tau;
    j["delta_v"] = c.delta_v;
    j["max_steps"] = c.max_steps;
    j["tau_per_class"] = c.tau_per_class ? json(*c.tau_per_class) : json(nullptr);
    j["standardize"] = c.standardize;
    j["seed"] = c.seed;
    j["selection_tolerance"] = c.selection_tolerance;
    j["snapshot_stride"] = c.snapshot_stride;
    json allowed = json::array();
    for (bool b : c.allowed_features) allowed.push_back(b ? 1 : 0);
    j["allowed_features"] = std::move(allowed);
    return j;
}

TgdrConfig config_from_json(const json& j) {
    TgdrConfig c;
    c.tau = j.at("tau").get<double>();
    c.delta_v = j.at("delta_v").get<double>();
    c.max_steps = j.at("max_steps").get<int>();
    if (!j.at("tau_per_class").is_null()) c.tau_per_class = j.at("tau_per_class").get<std::vector<double>>();
    c.standardize = j.at("standardize").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.selection_tolerance = j.at("selection_tolerance").get<double>();
    c.snapshot_stride = j.at("snapshot_stride").get<int>();
    for (const auto& b : j.at("allowed_features")) c.allowed_features.push_back(b.get<int>() != 0);
    return c;
}

}  // namespace

std::string config_json(const TgdrConfig& config) { return config_to_json(config).dump(); }

std::string serialize_model(const ModelFile& model) {
    json j;
    j["schema_version"] = model.schema_version;
    j["mode"] = std::string(model_mode_name(model.mode));
    j["classes"] = model.class_names;
    j["reference_class"] = model.class_names.empty() ? std::string() : model.class_names.back();
    j["feature_names"] = model.feature_names;
    j["studies"] = model.study_names;
    j["coefficients"] = coefficients_to_json(model.coefficients);
    if (model.pooled) {
        const auto& p = *model.pooled;
        j["pooled"] = {{"sigma2", matrix_to_json(p.sigma2)},
                       {"variance_formula",
                        p.formula == VarianceFormula::PaperLiteral ? "paper-literal" : "delta"},
                       {"underdetermined", p.underdetermined},
                       {"uniform_weights", p.uniform_weights},
                       {"source", coefficients_to_json(p.source)}};
    } else {
        j["pooled"] = nullptr;
    }
    if (model.bagging) {
        const auto& b = *model.bagging;
        j["bagging"] = {{"n_bootstrap", b.n_bootstrap},
                        {"n_succeeded", b.n_succeeded},
                        {"frequencies", vector_to_json(b.frequencies)},
                        {"cutoff", b.cutoff ? json(*b.cutoff) : json(nullptr)},
                        {"fitter", std::string(fitter_name(b.fitter))}};
    } else {
        j["bagging"] = nullptr;
    }
    j["config"] = config_to_json(model.config);
    j["seed"] = model.seed;
    return j.dump(2) + "\n";
}

ModelFile parse_model(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        ModelFile m;
        m.schema_version = j.at("schema_version").get<int>();
        require(m.schema_version == kModelSchemaVersion, ErrorCode::SchemaVersion,
                "unsupported model schema version " + std::to_string(m.schema_version));
        m.mode = parse_model_mode(j.at("mode").get<std::string>());
        m.class_names = j.at("classes").get<std::vector<std::string>>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.study_names = j.at("studies").get<std::vector<std::string>>();
        m.coefficients = coefficients_from_json(j.at("coefficients"));
        if (!j.at("pooled").is_null()) {
            const auto& p = j.at("pooled");
            PooledSection s;
            s.sigma2 = matrix_from_json(p.at("sigma2"));
            s.formula = p.at("variance_formula").get<std::string>() == "paper-literal"
                            ? VarianceFormula::PaperLiteral
                            : VarianceFormula::Delta;
            s.underdetermined = p.at("underdetermined").get<bool>();
            s.uniform_weights = p.at("uniform_weights").get<bool>();
            s.source = coefficients_from_json(p.at("source"));
            m.pooled = std::move(s);
        }
        if (!j.at("bagging").is_null()) {
            const auto& b = j.at("bagging");
            BaggingSection s;
            s.n_bootstrap = b.at("n_bootstrap").get<int>();
            s.n_succeeded = b.at("n_succeeded").get<int>();
            s.frequencies = vector_from_json(b.at("frequencies"));
            if (!b.at("cutoff").is_null()) s.cutoff = b.at("cutoff").get<double>();
            s.fitter = parse_fitter(b.at("fitter").get<std::string>());
            m.bagging = std::move(s);
        }
        m.config = config_from_json(j.at("config"));
        m.seed = j.at("seed").get<std::uint64_t>();
        require(static_cast<int>(m.class_names.size()) == m.coefficients.class_count(),
                ErrorCode::Parse, "class list does not match coefficients");
        require(static_cast<Index>(m.feature_names.size()) == m.coefficients.feature_count(),
                ErrorCode::Parse, "feature list does not match coefficients");
        return m;
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << serialize_model(model);
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

}  // namespace tgdr
