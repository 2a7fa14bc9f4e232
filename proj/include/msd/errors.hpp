#pragma once

#include <stdexcept>

namespace msd {

/// Field/grid shapes disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the domain of an operation (nonpositive density, exterior
/// of the simplex, non-mean-zero right-hand side, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative or factorization step did not succeed.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace msd
