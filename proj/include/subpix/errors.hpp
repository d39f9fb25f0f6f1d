#pragma once

#include <stdexcept>
#include <string>

namespace subpix {

/// A numerical failure (indefinite covariance, singular Gram matrix). Distinct from
/// std::invalid_argument, which signals bad caller input.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace subpix
