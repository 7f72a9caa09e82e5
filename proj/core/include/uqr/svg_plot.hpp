#pragma once

#include <string>
#include <vector>

#include "uqr/rejection.hpp"

namespace uqr {

// Dependency-free three-panel line plot (NRA, CQ, RQ) of one or more
// rejection curves. Infinite/undefined RQ points are skipped.
std::string render_curve_svg(const std::vector<std::pair<std::string, RejectionCurve>>& curves);

void write_curve_svg(const std::string& path,
                     const std::vector<std::pair<std::string, RejectionCurve>>& curves);

}  // namespace uqr
