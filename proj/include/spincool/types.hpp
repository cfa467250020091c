#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace spincool {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

// One row per site, one column per Cartesian component. Column-major, so each
// component is contiguous (the layout the field kernels convolve over).
template <typename Scalar>
using SpinArray = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

template <typename Scalar>
using FieldArray = SpinArray<Scalar>;

template <typename Scalar>
using CouplingMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index3 = Eigen::Vector3i;

}  // namespace spincool
