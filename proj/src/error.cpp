#include "vulnscape/error.hpp"

namespace vulnscape {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::Io: return "IO_ERROR";
        case ErrorCode::Parse: return "PARSE_ERROR";
        case ErrorCode::MissingColumn: return "MISSING_COLUMN";
        case ErrorCode::RangeViolation: return "RANGE_VIOLATION";
        case ErrorCode::DuplicateKey: return "DUPLICATE_KEY";
        case ErrorCode::BaselineWave: return "BASELINE_WAVE";
        case ErrorCode::UnknownVariable: return "UNKNOWN_VARIABLE";
        case ErrorCode::KindMismatch: return "KIND_MISMATCH";
        case ErrorCode::BadDate: return "BAD_DATE";
        case ErrorCode::NegativeAge: return "NEGATIVE_AGE";
        case ErrorCode::DegenerateGeometry: return "DEGENERATE_GEOMETRY";
        case ErrorCode::OverlapAmbiguity: return "OVERLAP_AMBIGUITY";
        case ErrorCode::ZeroPopulationWeight: return "ZERO_POPULATION_WEIGHT";
        case ErrorCode::MissingWave: return "MISSING_WAVE";
        case ErrorCode::PerplexityTooLarge: return "PERPLEXITY_TOO_LARGE";
        case ErrorCode::NonFiniteGradient: return "NON_FINITE_GRADIENT";
        case ErrorCode::TooFewPoints: return "TOO_FEW_POINTS";
        case ErrorCode::KExceedsN: return "K_EXCEEDS_N";
        case ErrorCode::MissingScaleValue: return "MISSING_SCALE_VALUE";
        case ErrorCode::KeyMismatch: return "KEY_MISMATCH";
        case ErrorCode::DegenerateCloud: return "DEGENERATE_CLOUD";
        case ErrorCode::DegenerateInput: return "DEGENERATE_INPUT";
        case ErrorCode::AllValuesTied: return "ALL_VALUES_TIED";
        case ErrorCode::SampleTooSmall: return "SAMPLE_TOO_SMALL";
        case ErrorCode::LabelWithoutProfile: return "LABEL_WITHOUT_PROFILE";
        case ErrorCode::ConstantInput: return "CONSTANT_INPUT";
        case ErrorCode::EmptyInput: return "EMPTY_INPUT";
        case ErrorCode::MissingPopulation: return "MISSING_POPULATION";
        case ErrorCode::NoRunAvailable: return "NO_RUN_AVAILABLE";
        case ErrorCode::NotFound: return "NOT_FOUND";
    }
    return "UNKNOWN";
}

bool is_validation(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io:
        case ErrorCode::NonFiniteGradient:
        case ErrorCode::DegenerateGeometry:
        case ErrorCode::DegenerateCloud:
        case ErrorCode::DegenerateInput:
        case ErrorCode::AllValuesTied:
        case ErrorCode::ConstantInput:
        case ErrorCode::ZeroPopulationWeight:
        case ErrorCode::OverlapAmbiguity:
            return false;
        default:
            return true;
    }
}

}  // namespace vulnscape
