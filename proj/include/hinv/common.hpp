#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace hinv {

using Point = std::array<double, 3>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad sizes, unknown identifiers, violated preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Singular pivots, loss of definiteness, failed residual checks.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Problem too large for the dense desk-scale path.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// Half-open range [begin, end) of positions in cluster order.
struct IndexRange {
    int begin = 0;
    int end = 0;

    int size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    bool contains(const IndexRange& other) const
    {
        return begin <= other.begin && other.end <= end;
    }
    bool operator==(const IndexRange&) const = default;
};

} // namespace hinv
