#pragma once

#include <stdexcept>
#include <string>

namespace qe {

enum class ErrorKind {
  // input errors
  ZeroRow,
  DimMismatch,
  LengthMismatch,
  EmptyInput,
  MissingColumn,
  RaggedRow,
  NonNumericScore,
  BadMagic,
  TruncatedFile,
  BadPair,
  InvalidEncoding,
  EmptySentence,
  MissingEmbedding,
  EmbeddingMismatch,
  ConfigLayerAbsent,
  IndexOutOfRange,
  IdOutOfRange,
  EmptyPairList,
  TemperatureNonPositive,
  AllPairsEmpty,
  EmptyMatrix,
  EmptyBoth,
  EmptyReference,
  SizeTooLarge,
  InvalidArgument,
  Io,
  // numerical failures
  ZeroVariance,
  NonFiniteLoss,
};

const char* to_string(ErrorKind kind) noexcept;

/// True for failures caused by the numbers themselves rather than by
/// malformed input (the CLI maps these to exit code 3).
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qe
