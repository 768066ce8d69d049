#pragma once

#include "tgdr/model.hpp"
#include "tgdr/solver.hpp"

#include <optional>
#include <vector>

namespace tgdr::detail {

// Shared path loop. With one design this is plain TGDR; with several the
// threshold is computed on the summed (meta) gradient and each study moves
// along its own gradient under the shared mask.
RegularizationPath run_path(const std::vector<StudyDesign>& designs, int class_count,
                            Index feature_count, const TgdrConfig& config,
                            const std::optional<Standardization>& standardization);

}  // namespace tgdr::detail
