#include "tgdr/fitter.hpp"

#include "tgdr/error.hpp"
#include "tgdr/meta.hpp"

#include <string>

namespace tgdr {

std::string_view fitter_name(Fitter fitter) {
    return fitter == Fitter::Meta ? "meta" : "tgdr";
}

Fitter parse_fitter(std::string_view name) {
    if (name == "tgdr") return Fitter::Tgdr;
    if (name == "meta") return Fitter::Meta;
    fail(ErrorCode::InvalidArgument, "unknown fitter '" + std::string(name) + "'");
}

RegularizationPath fit(Fitter fitter, const ExpressionDataset& data, const TgdrConfig& config) {
    return fitter == Fitter::Meta ? fit_meta_path(data, config) : fit_path(data, config);
}

ModelCoefficients fit_final(Fitter fitter, const ExpressionDataset& data, TgdrConfig config) {
    config.snapshot_stride = std::max(config.max_steps, 1);
    return fit(fitter, data, config).final_coefficients();
}

Prediction predict_dataset(Fitter fitter, const ModelCoefficients& coeffs,
                           const ExpressionDataset& data) {
    if (fitter == Fitter::Meta) return predict(coeffs, data.features, data.study_ids);
    return predict(coeffs, data.features);
}

}  // namespace tgdr
