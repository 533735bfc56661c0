#pragma once

#include <stdexcept>
#include <string>

namespace layerkit {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input is not valid UTF-8 / JSON at all.
class EncodingError : public Error {
public:
    using Error::Error;
};

/// JSON is well formed but violates the protocol schema
/// (missing required field, unknown key, unknown enum value, wrong type).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A field value is outside its documented range (e.g. theta >= 2*pi).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Operation requires a protocol that passes validate().
class InvalidProtocol : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Bezier path with zero total length.
class DegenerateCurve : public Error {
public:
    using Error::Error;
};

class FontNotFound : public Error {
public:
    using Error::Error;
};

/// Policies with different factor layouts cannot be compared.
class StructureMismatch : public Error {
public:
    using Error::Error;
};

class EmptyCorpus : public Error {
public:
    using Error::Error;
};

/// Corpus item id has no matching prediction.
class MissingPrediction : public Error {
public:
    using Error::Error;
};

/// File system / decode failures.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace layerkit
