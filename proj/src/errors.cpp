#include "dexter/errors.hpp"

namespace dexter {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::TruncatedChunk: return "TruncatedChunk";
        case ErrorKind::UnknownChunkType: return "UnknownChunkType";
        case ErrorKind::StringIndexOutOfRange: return "StringIndexOutOfRange";
        case ErrorKind::BadArchive: return "BadArchive";
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::EmptyAfterNormalization: return "EmptyAfterNormalization";
        case ErrorKind::MissingField: return "MissingField";
        case ErrorKind::InvalidHash: return "InvalidHash";
        case ErrorKind::MissingCategoryFile: return "MissingCategoryFile";
        case ErrorKind::DuplicateEntry: return "DuplicateEntry";
        case ErrorKind::EmptyDescription: return "EmptyDescription";
        case ErrorKind::BothEmpty: return "BothEmpty";
        case ErrorKind::DuplicateDocId: return "DuplicateDocId";
        case ErrorKind::UnknownDocId: return "UnknownDocId";
        case ErrorKind::EmptyText: return "EmptyText";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::WeightCountMismatch: return "WeightCountMismatch";
        case ErrorKind::PersistenceError: return "PersistenceError";
        case ErrorKind::CorruptLine: return "CorruptLine";
        case ErrorKind::EmptyInputDescription: return "EmptyInputDescription";
        case ErrorKind::TransportError: return "TransportError";
        case ErrorKind::AuthError: return "AuthError";
        case ErrorKind::RateLimited: return "RateLimited";
        case ErrorKind::EmptyCompletion: return "EmptyCompletion";
        case ErrorKind::IncompleteBatch: return "IncompleteBatch";
        case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
        case ErrorKind::EmptyAfterPreprocessing: return "EmptyAfterPreprocessing";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::MissingClass: return "MissingClass";
        case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorKind::ProtocolError: return "ProtocolError";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::UndefinedMetric: return "UndefinedMetric";
        case ErrorKind::PartitionMismatch: return "PartitionMismatch";
        case ErrorKind::UsageError: return "UsageError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "UnknownError";
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UsageError:
            return 1;
        case ErrorKind::TransportError:
        case ErrorKind::AuthError:
        case ErrorKind::RateLimited:
        case ErrorKind::EmptyCompletion:
        case ErrorKind::IncompleteBatch:
        case ErrorKind::Timeout:
        case ErrorKind::ProtocolError:
            return 3;
        default:
            return 2;
    }
}

}  // namespace dexter
