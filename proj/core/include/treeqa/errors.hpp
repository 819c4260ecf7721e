#pragma once

#include <stdexcept>
#include <string>

namespace treeqa {

/// Base class for all errors raised by this library. The CLI maps
/// DataError subtypes to exit code 1 and SetupError subtypes to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problems with input data (documents, files, question sets).
struct DataError : Error {
    using Error::Error;
};

/// Problems with configuration or external clients.
struct SetupError : Error {
    using Error::Error;
};

struct EmptyDocument : DataError {
    using DataError::DataError;
};
struct SchemaError : DataError {
    using DataError::DataError;
};
struct StructureError : DataError {
    using DataError::DataError;
};
struct ZeroWeightParent : DataError {
    using DataError::DataError;
};
struct DimMismatch : DataError {
    using DataError::DataError;
};
struct DuplicateNodeId : DataError {
    using DataError::DataError;
};
struct IoFailure : DataError {
    using DataError::DataError;
};
struct EmptyCorpus : DataError {
    using DataError::DataError;
};
struct UnknownNode : DataError {
    using DataError::DataError;
};
struct MissingQuestion : DataError {
    using DataError::DataError;
};
struct DuplicateQuestion : DataError {
    using DataError::DataError;
};
struct BudgetTooSmall : DataError {
    using DataError::DataError;
};
struct ParseFailure : DataError {
    using DataError::DataError;
};

struct ConfigError : SetupError {
    using SetupError::SetupError;
};
struct ClientFailure : SetupError {
    using SetupError::SetupError;
};
struct RetrievalFailure : SetupError {
    using SetupError::SetupError;
};

}  // namespace treeqa
