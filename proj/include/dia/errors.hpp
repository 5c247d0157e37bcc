#pragma once

#include <stdexcept>
#include <string>

namespace dia {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (d <= 0, coincident points).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Mismatched vector/matrix sizes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values or unreadable config file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Ill-conditioned innovation covariance in the EKF update.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Zero beam gain or zero reflection: delay/Doppler variance is unbounded.
class UnobservableError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a point where the measurement Jacobian is undefined.
class SingularGeometryError : public Error {
public:
    using Error::Error;
};

/// Zero feature vector handed to the cosine similarity.
class DegenerateFeatureError : public Error {
public:
    using Error::Error;
};

/// Operation requires more targets than supplied.
class NotApplicableError : public Error {
public:
    using Error::Error;
};

/// An assignment that is not a bijection.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// Problem too large for the exhaustive solver.
class SizeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dia
