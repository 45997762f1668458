#pragma once

#include <stdexcept>
#include <string>

namespace motioncloud {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A file or archive could not be read, written or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

/// The numerical problem has no meaningful answer for this input
/// (rank-0 data, straight trajectories, overflowing kernels).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace motioncloud
