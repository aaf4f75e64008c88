#include "respq/error.hpp"

namespace respq {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::BandOutOfRange: return "BandOutOfRange";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::SignalShorterThanWindow: return "SignalShorterThanWindow";
    case ErrorCode::SegmentTooShort: return "SegmentTooShort";
    case ErrorCode::DegenerateAutocorrelation: return "DegenerateAutocorrelation";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::SubsegmentTooLong: return "SubsegmentTooLong";
    case ErrorCode::EmptyBand: return "EmptyBand";
    case ErrorCode::InsufficientPeaks: return "InsufficientPeaks";
    case ErrorCode::ZeroVarianceSegment: return "ZeroVarianceSegment";
    case ErrorCode::WrongStage: return "WrongStage";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NoValidCandidates: return "NoValidCandidates";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ProfileOutOfBand: return "ProfileOutOfBand";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

}  // namespace respq
