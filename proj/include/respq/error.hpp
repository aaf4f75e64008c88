#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace respq {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveRate,
  EmptySignal,
  BandOutOfRange,
  SignalTooShort,
  SignalShorterThanWindow,
  SegmentTooShort,
  DegenerateAutocorrelation,
  EigenFailure,
  SubsegmentTooLong,
  EmptyBand,
  InsufficientPeaks,
  ZeroVarianceSegment,
  WrongStage,
  EmptyPopulation,
  EmptyMask,
  NoValidCandidates,
  InsufficientData,
  ArityMismatch,
  TooFewSamples,
  NonFiniteLoss,
  ShapeMismatch,
  LabelOutOfRange,
  GridMismatch,
  MissingModel,
  MissingMask,
  FractionOutOfRange,
  EmptySeries,
  ProfileOutOfBand,
  ParseError,
  ConfigError,
  MissingInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can print a stable `error: <Code>: <detail>` line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace respq
