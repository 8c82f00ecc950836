#pragma once

#include <stdexcept>
#include <string>

namespace gsens {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A function evaluation produced NaN or infinity where a finite value is required.
struct NonFinite : Error {
  explicit NonFinite(const std::string& msg) : Error(msg) {}
};

// A pivot fell below the singularity threshold while inverting the bread matrix.
struct SingularBread : Error {
  explicit SingularBread(const std::string& msg) : Error(msg) {}
};

struct NegativeVariance : Error {
  explicit NegativeVariance(const std::string& msg) : Error(msg) {}
};

// Logit-link residual transform requested without a fitted outcome model.
struct MissingOutcomeModel : Error {
  explicit MissingOutcomeModel(const std::string& msg) : Error(msg) {}
};

// Logistic MLE diverged (complete or quasi-complete separation).
struct Separation : Error {
  explicit Separation(const std::string& msg) : Error(msg) {}
};

struct RankDeficient : Error {
  explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

struct WeakInstrument : Error {
  explicit WeakInstrument(const std::string& msg) : Error(msg) {}
};

// Requested marginal probability cannot be attained by the data-generating process.
struct Unreachable : Error {
  explicit Unreachable(const std::string& msg) : Error(msg) {}
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& msg) : Error(msg) {}
};

struct UnsupportedCombination : Error {
  explicit UnsupportedCombination(const std::string& msg) : Error(msg) {}
};

// CSV ingestion errors.
struct MissingColumn : Error {
  explicit MissingColumn(const std::string& msg) : Error(msg) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct EmptyData : Error {
  explicit EmptyData(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Run-configuration validation failure; message names the offending field.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace gsens
