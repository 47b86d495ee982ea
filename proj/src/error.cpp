#include "qe/error.hpp"

namespace qe {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::NonNumericScore: return "NonNumericScore";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::BadPair: return "BadPair";
    case ErrorKind::InvalidEncoding: return "InvalidEncoding";
    case ErrorKind::EmptySentence: return "EmptySentence";
    case ErrorKind::MissingEmbedding: return "MissingEmbedding";
    case ErrorKind::EmbeddingMismatch: return "EmbeddingMismatch";
    case ErrorKind::ConfigLayerAbsent: return "ConfigLayerAbsent";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::IdOutOfRange: return "IdOutOfRange";
    case ErrorKind::EmptyPairList: return "EmptyPairList";
    case ErrorKind::TemperatureNonPositive: return "TemperatureNonPositive";
    case ErrorKind::AllPairsEmpty: return "AllPairsEmpty";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::EmptyBoth: return "EmptyBoth";
    case ErrorKind::EmptyReference: return "EmptyReference";
    case ErrorKind::SizeTooLarge: return "SizeTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
  return kind == ErrorKind::ZeroVariance || kind == ErrorKind::NonFiniteLoss;
}

}  // namespace qe
