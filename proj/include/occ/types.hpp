#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace occ {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// at most three spatial coordinates, stored inline
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct DomainError : Error
{
  using Error::Error;
};

// quadrature or factorization failed to meet its tolerance
struct NumericError : Error
{
  using Error::Error;
};

struct ConfigError : Error
{
  using Error::Error;
};

// population or work cap exceeded; partial results are invalid
struct ResourceError : Error
{
  using Error::Error;
};

struct StatisticalError : Error
{
  using Error::Error;
};

} // namespace occ
