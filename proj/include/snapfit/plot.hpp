#pragma once

#include <string>
#include <vector>

#include "snapfit/oracle.hpp"

namespace snapfit::plot {

// One SVG panel overlaying every profile as a polyline, with a legend
// of run ids. Written as plain markup, no plotting library.
std::string profiles_to_svg(const std::vector<oracle::ForceProfile>& profiles,
                            const std::string& title);

}  // namespace snapfit::plot
