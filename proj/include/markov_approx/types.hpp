#pragma once

#include <Eigen/Dense>

namespace markov_approx {

/// A point in R^d; the dimension is the vector size.
using VectorState = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace markov_approx
