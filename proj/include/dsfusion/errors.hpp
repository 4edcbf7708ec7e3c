#pragma once

#include <stdexcept>
#include <string>

namespace dsfusion {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A focal set or mass function references elements outside the frame it is
// being used with, or two operands live on different frames.
class FrameMismatchError : public Error {
public:
    using Error::Error;
};

// Invalid construction arguments or broken invariants (bad masses, malformed
// matrices, impossible configuration values).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Dempster combination is undefined: the operands are in total conflict
// (K = 1 within tolerance). For folds over a list, `left_end` is the last
// input already merged into the running combination and `right` the input
// that triggered the conflict; both are -1 for a plain two-operand call.
class TotalConflictError : public Error {
public:
    explicit TotalConflictError(double conflict, int left_end = -1, int right = -1)
        : Error(make_message(conflict, left_end, right)),
          conflict_(conflict), left_end_(left_end), right_(right) {}

    double conflict() const noexcept { return conflict_; }
    int left_end_index() const noexcept { return left_end_; }
    int right_index() const noexcept { return right_; }

    TotalConflictError with_indices(int left_end, int right) const {
        return TotalConflictError(conflict_, left_end, right);
    }

private:
    static std::string make_message(double conflict, int left_end, int right) {
        std::string msg = "total conflict: K = " + std::to_string(conflict) +
                          ", Dempster combination undefined";
        if (right >= 0) {
            msg += " (inputs 0.." + std::to_string(left_end) +
                   " combined vs input " + std::to_string(right) + ")";
        }
        return msg;
    }

    double conflict_;
    int left_end_;
    int right_;
};

// Malformed input file; the message carries file, row, and column context.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace dsfusion
