#pragma once

#include "tgdr/bagging.hpp"
#include "tgdr/dataset.hpp"
#include "tgdr/fitter.hpp"
#include "tgdr/meta.hpp"
#include "tgdr/model.hpp"
#include "tgdr/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tgdr {

struct DatasetOptions {
    std::string label_col = "label";
    std::optional<std::string> study_col;
    std::optional<std::string> id_col;
    // 0 = detect from the header (tab if present, else comma).
    char delimiter = 0;
    // Explicit class order; the last entry is the reference class. Empty
    // means first-seen order.
    std::vector<std::string> class_order;
    // When false a missing label column is allowed; labels are then all 1
    // and `class_order` must be given.
    bool labels_required = true;
};

struct LoadedDataset {
    ExpressionDataset data;
    std::vector<std::string> sample_ids;  // id column, or 1-based row numbers
    bool has_labels = true;
};

/// Reads delimiter-separated text with a mandatory header row, samples as
/// rows. All columns other than the label, study and id columns are
/// numeric features.
LoadedDataset load_dataset(const std::filesystem::path& path, const DatasetOptions& options = {});
LoadedDataset parse_dataset(std::istream& in, const DatasetOptions& options = {},
                            std::string_view source = "<stream>");

void write_dataset_csv(std::ostream& out, const ExpressionDataset& data);

// Full-precision (17 significant digits) decimal text.
std::string format_double(double value);

enum class ModelMode { Tgdr, Multi, Meta, Pooled, Bagged };

std::string_view model_mode_name(ModelMode mode);
ModelMode parse_model_mode(std::string_view name);

inline constexpr int kModelSchemaVersion = 1;

struct PooledSection {
    Eigen::MatrixXd sigma2;  // (K-1) x M
    VarianceFormula formula = VarianceFormula::Delta;
    bool underdetermined = false;
    bool uniform_weights = false;
    ModelCoefficients source;

};

struct BaggingSection {
    int n_bootstrap = 0;
    int n_succeeded = 0;
    Eigen::VectorXd frequencies;
    std::optional<double> cutoff;
    Fitter fitter = Fitter::Tgdr;

};

struct ModelFile {
    int schema_version = kModelSchemaVersion;
    ModelMode mode = ModelMode::Tgdr;
    std::vector<std::string> class_names;  // last entry is the reference class
    std::vector<std::string> feature_names;
    std::vector<std::string> study_names;
    ModelCoefficients coefficients;
    std::optional<PooledSection> pooled;
    std::optional<BaggingSection> bagging;
    TgdrConfig config;
    std::uint64_t seed = 0;

};

std::string serialize_model(const ModelFile& model);
ModelFile parse_model(std::string_view text);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

// Resolved configuration as a JSON object string (single line).
std::string config_json(const TgdrConfig& config);

}  // namespace tgdr
