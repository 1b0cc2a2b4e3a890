#pragma once

#include <stdexcept>
#include <string>

namespace dexter {

// Every failure the pipeline can surface, named after what went wrong.
// Grouped loosely by the subsystem that raises it.
enum class ErrorKind {
    // manifest / apk parsing
    TruncatedChunk,
    UnknownChunkType,
    StringIndexOutOfRange,
    BadArchive,
    MalformedRecord,
    EmptyAfterNormalization,
    // labeling
    MissingField,
    InvalidHash,
    // corpus
    MissingCategoryFile,
    DuplicateEntry,
    EmptyDescription,
    // matcher
    BothEmpty,
    // retrieval
    DuplicateDocId,
    UnknownDocId,
    EmptyText,
    DimensionMismatch,
    WeightCountMismatch,
    // cache
    PersistenceError,
    CorruptLine,
    // gateway
    EmptyInputDescription,
    TransportError,
    AuthError,
    RateLimited,
    EmptyCompletion,
    IncompleteBatch,
    MissingPlaceholder,
    // text preprocessing
    EmptyAfterPreprocessing,
    // classification
    TooFewSamples,
    MissingClass,
    EmptyTrainingSet,
    ProtocolError,
    Timeout,
    UndefinedMetric,
    PartitionMismatch,
    // cli / config
    UsageError,
    ConfigError,
    IoError,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Process exit code for a failure, per the CLI contract:
// 1 usage, 2 data/validation, 3 transport.
int exit_code_for(ErrorKind kind);

}  // namespace dexter
