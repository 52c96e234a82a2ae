#pragma once

#include <stdexcept>
#include <string>

namespace ergolab {

/// Raised when an argument violates an operation's precondition
/// (out-of-domain point, empty sample count, mismatched phase or resolution).
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an autonomous evaluator is handed a measure-dependent system,
/// or the other way round.
class wrong_evaluator : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

[[noreturn]] inline void fail_argument(const std::string& what) { throw invalid_argument(what); }

inline void require(bool ok, const char* what)
{
    if (!ok) fail_argument(what);
}

} // namespace detail
} // namespace ergolab
