#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace marlrank {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

using Real = double;
using MatrixXr = Matrix<Real>;
using VectorXr = Vector<Real>;
using Index = Eigen::Index;

// Relevance grade / action level. Three levels: 0, 1, 2.
inline constexpr int kNumLevels = 3;

struct ActionLevel {
  int level = 0;

  friend bool operator==(ActionLevel, ActionLevel) = default;
};

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or missing input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Tensor or model shape mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace marlrank
