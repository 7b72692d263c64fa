// exclusion.hpp

#pragma once

#include <string>
#include <vector>

namespace evstudy {

// A security dropped from one computation, with a machine-readable reason
// (e.g. "missing_ar", "thin_estimation_window") and free-form detail.
struct Exclusion {
    std::string ticker;
    std::string reason;
    std::string detail;

    auto operator<=>(const Exclusion&) const = default;
};

using ExclusionList = std::vector<Exclusion>;

// Parallel loops run through this switch; `serial` is the reference path the
// OpenMP kernels are tested against.
enum class Exec { serial, parallel };

}  // namespace evstudy
