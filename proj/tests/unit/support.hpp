#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "spincool/types.hpp"

namespace support {

inline spincool::SpinArray<double> to_array(const std::vector<std::array<double, 3>>& v) {
  spincool::SpinArray<double> s(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t m = 0; m < v.size(); ++m) s.row(m) << v[m][0], v[m][1], v[m][2];
  return s;
}

inline double max_abs_diff(const spincool::FieldArray<double>& h,
                           const std::vector<std::array<double, 3>>& ref) {
  double worst = 0.0;
  for (std::size_t m = 0; m < ref.size(); ++m)
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(h(m, c) - ref[m][c]));
  return worst;
}

}  // namespace support
