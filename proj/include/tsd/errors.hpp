#pragma once

#include <stdexcept>
#include <string>

namespace tsd {

/// Shapes or manifold kinds of the arguments do not agree.
class DimensionMismatch : public std::invalid_argument {
 public:
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// The principal matrix logarithm is not defined (an eigenvalue sits at -1),
/// so the inverse exponential map has no unique minimal-norm answer.
class CutLocusError : public std::domain_error {
 public:
  explicit CutLocusError(const std::string& what) : std::domain_error(what) {}
};

/// The requested operation has no implementation for this geometry
/// (e.g. parallel transport on a Stiefel manifold with p < n).
class UnsupportedGeometry : public std::logic_error {
 public:
  explicit UnsupportedGeometry(const std::string& what) : std::logic_error(what) {}
};

/// Non-finite values, line-search underflow and similar numerical breakdowns.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tsd
