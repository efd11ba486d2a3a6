#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnscape {

enum class ErrorCode {
    InvalidArgument,
    Io,
    Parse,
    MissingColumn,
    RangeViolation,
    DuplicateKey,
    BaselineWave,
    UnknownVariable,
    KindMismatch,
    BadDate,
    NegativeAge,
    DegenerateGeometry,
    OverlapAmbiguity,
    ZeroPopulationWeight,
    MissingWave,
    PerplexityTooLarge,
    NonFiniteGradient,
    TooFewPoints,
    KExceedsN,
    MissingScaleValue,
    KeyMismatch,
    DegenerateCloud,
    DegenerateInput,
    AllValuesTied,
    SampleTooSmall,
    LabelWithoutProfile,
    ConstantInput,
    EmptyInput,
    MissingPopulation,
    NoRunAvailable,
    NotFound,
};

/// Machine-readable upper-snake name, e.g. `K_EXCEEDS_N`.
std::string_view code_name(ErrorCode code) noexcept;

/// True for errors caused by bad user input (CLI exit 1, HTTP 4xx) rather
/// than by a failure while computing.
bool is_validation(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Row/field carrying variant used by the loaders.
class RowError : public Error {
public:
    RowError(ErrorCode code, std::size_t row, std::string field, const std::string& message)
        : Error(code, message), row_(row), field_(std::move(field)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t row_;
    std::string field_;
};

}  // namespace vulnscape
