#pragma once

#include <stdexcept>
#include <string>

namespace paddist {

enum class Errc {
  NonUnit,
  RingMismatch,
  Divergent,
  NotSymplectic,
  NotStrictIwahori,
  NonUnitPivot,
  NotInT0,
  NotInXi,
  IndexOutOfRange,
  NonUnitEntry,
  NotAdapted,
  TruncationMismatch,
  RTooSmall,
  NonUnitMinor,
  NotDominant,
  PrecisionExhausted,
  InsufficientDegree,
  NotASlopeDatum,
  LiftDiverged,
  RankMismatch,
  BadLevel,
  BadPrime,
  LiftFailure,
  HNotAdmissible,
  NonCommuting,
  RankUnstable,
  PresentationNotFound,
  NotRankOne,
  DegeneratePairing,
  InvalidArgument,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::NonUnit: return "NonUnit";
    case Errc::RingMismatch: return "RingMismatch";
    case Errc::Divergent: return "Divergent";
    case Errc::NotSymplectic: return "NotSymplectic";
    case Errc::NotStrictIwahori: return "NotStrictIwahori";
    case Errc::NonUnitPivot: return "NonUnitPivot";
    case Errc::NotInT0: return "NotInT0";
    case Errc::NotInXi: return "NotInXi";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NonUnitEntry: return "NonUnitEntry";
    case Errc::NotAdapted: return "NotAdapted";
    case Errc::TruncationMismatch: return "TruncationMismatch";
    case Errc::RTooSmall: return "RTooSmall";
    case Errc::NonUnitMinor: return "NonUnitMinor";
    case Errc::NotDominant: return "NotDominant";
    case Errc::PrecisionExhausted: return "PrecisionExhausted";
    case Errc::InsufficientDegree: return "InsufficientDegree";
    case Errc::NotASlopeDatum: return "NotASlopeDatum";
    case Errc::LiftDiverged: return "LiftDiverged";
    case Errc::RankMismatch: return "RankMismatch";
    case Errc::BadLevel: return "BadLevel";
    case Errc::BadPrime: return "BadPrime";
    case Errc::LiftFailure: return "LiftFailure";
    case Errc::HNotAdmissible: return "HNotAdmissible";
    case Errc::NonCommuting: return "NonCommuting";
    case Errc::RankUnstable: return "RankUnstable";
    case Errc::PresentationNotFound: return "PresentationNotFound";
    case Errc::NotRankOne: return "NotRankOne";
    case Errc::DegeneratePairing: return "DegeneratePairing";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }
  const char* name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace paddist
