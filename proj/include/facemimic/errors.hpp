#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facemimic {

enum class ErrorKind {
    Dimension,
    Range,
    Argument,
    Numeric,
    State,
    Integrity,
    Training,
    Io,
    Config,
};

std::string_view to_string(ErrorKind kind);

/// Base class for every error raised by the library. The kind is stable and
/// is what the CLI prints in its machine-readable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
public:
    explicit KindedError(const std::string& message) : Error(K, message) {}
};

using DimensionError = KindedError<ErrorKind::Dimension>;
using RangeError = KindedError<ErrorKind::Range>;
using ArgumentError = KindedError<ErrorKind::Argument>;
using NumericError = KindedError<ErrorKind::Numeric>;
using StateError = KindedError<ErrorKind::State>;
using IntegrityError = KindedError<ErrorKind::Integrity>;
using TrainingError = KindedError<ErrorKind::Training>;
using IoError = KindedError<ErrorKind::Io>;
using ConfigError = KindedError<ErrorKind::Config>;

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::Range: return "range";
        case ErrorKind::Argument: return "argument";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::State: return "state";
        case ErrorKind::Integrity: return "integrity";
        case ErrorKind::Training: return "training";
        case ErrorKind::Io: return "io";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

}  // namespace facemimic
