#pragma once

#include "tgdr/dataset.hpp"
#include "tgdr/solver.hpp"

#include <string_view>

namespace tgdr {

enum class Fitter { Tgdr, Meta };

std::string_view fitter_name(Fitter fitter);
Fitter parse_fitter(std::string_view name);

RegularizationPath fit(Fitter fitter, const ExpressionDataset& data, const TgdrConfig& config);

// Coefficients after `config.max_steps` steps, without intermediate snapshots.
ModelCoefficients fit_final(Fitter fitter, const ExpressionDataset& data, TgdrConfig config);

// Predictions on `data` rows; meta models use each sample's own study block.
Prediction predict_dataset(Fitter fitter, const ModelCoefficients& coeffs,
                           const ExpressionDataset& data);

}  // namespace tgdr
