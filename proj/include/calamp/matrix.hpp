#pragma once

#include <Eigen/Dense>
#include <complex>

namespace calamp {

template <class T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatXd = Eigen::MatrixXd;
using VecXd = Eigen::VectorXd;
using MatXc = MatX<std::complex<double>>;
using VecXc = VecX<std::complex<double>>;

}  // namespace calamp
