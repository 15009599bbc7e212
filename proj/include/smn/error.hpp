#pragma once

#include <stdexcept>
#include <string>

namespace smn {

enum class Err {
  MissingFile,
  CorruptHeader,
  DimensionMismatch,
  DuplicateClipId,
  UnknownClass,
  InvalidDataset,
  IoFailure,
  InvalidSpec,
  TargetBelowObserved,
  InsufficientData,
  TooFewPoints,
  InvalidCounts,
  EmptyClass,
  NoCandidateNeighbors,
  EmptyRosterClass,
  DivergedLoss,
  RosterMismatch,
  MissingClassMean,
  MissingMemberBank,
  UntrainedStream,
  ClassTooSmall,
  EmptyTestSet,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::MissingFile: return "MissingFile";
    case Err::CorruptHeader: return "CorruptHeader";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::DuplicateClipId: return "DuplicateClipId";
    case Err::UnknownClass: return "UnknownClass";
    case Err::InvalidDataset: return "InvalidDataset";
    case Err::IoFailure: return "IoFailure";
    case Err::InvalidSpec: return "InvalidSpec";
    case Err::TargetBelowObserved: return "TargetBelowObserved";
    case Err::InsufficientData: return "InsufficientData";
    case Err::TooFewPoints: return "TooFewPoints";
    case Err::InvalidCounts: return "InvalidCounts";
    case Err::EmptyClass: return "EmptyClass";
    case Err::NoCandidateNeighbors: return "NoCandidateNeighbors";
    case Err::EmptyRosterClass: return "EmptyRosterClass";
    case Err::DivergedLoss: return "DivergedLoss";
    case Err::RosterMismatch: return "RosterMismatch";
    case Err::MissingClassMean: return "MissingClassMean";
    case Err::MissingMemberBank: return "MissingMemberBank";
    case Err::UntrainedStream: return "UntrainedStream";
    case Err::ClassTooSmall: return "ClassTooSmall";
    case Err::EmptyTestSet: return "EmptyTestSet";
  }
  return "Unknown";
}

/// Structured failure carrying a stable error name for CLI reporting.
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& detail)
      : std::runtime_error(std::string(err_name(code)) + ": " + detail), code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& detail) { throw Error(code, detail); }

}  // namespace smn
