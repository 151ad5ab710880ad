#ifndef FOIL_TYPES_HPP
#define FOIL_TYPES_HPP

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace foil {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Label { Real, Foil };

enum class PosSubset { Noun, Verb, Adjective, Adverb, Preposition };

/// Raised on bad or inconsistent input data (maps to CLI exit code 2).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on numeric failure such as a non-finite loss (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

std::string to_string(Label label);
Label label_from_string(const std::string& s);

std::string to_string(PosSubset pos);
PosSubset pos_from_string(const std::string& s);

}  // namespace foil

#endif
