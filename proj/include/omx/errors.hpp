#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace omx {

enum class ErrorCode {
    MalformedRecord,
    NonFiniteValue,
    UnknownMetric,
    InsufficientData,
    SchemaError,
    UnknownStatSpec,
    BadThreshold,
    MissingMetric,
    DanglingEndpoint,
    SynonymKindViolation,
    SelfLoop,
    DuplicateModelId,
    UnknownSeed,
    IoError,
    CorruptGraphFile,
    UnknownTrigger,
    UnknownTool,
    DuplicateTool,
    EmptyContext,
    Timeout,
    ConnectionError,
    HttpStatus,
    MalformedResponse,
    MissingSection,
    TooManyCauses,
    NoCauses,
    BadWindow,
    OutOfRange,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the engine carries a code so callers can branch
// without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line_no, const std::string& reason);
    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

class InsufficientData : public Error {
public:
    InsufficientData(std::size_t needed, std::size_t got, const std::string& what = {});
    std::size_t needed() const noexcept { return needed_; }
    std::size_t got() const noexcept { return got_; }

private:
    std::size_t needed_;
    std::size_t got_;
};

class SchemaError : public Error {
public:
    SchemaError(std::string path, std::string reason);
    const std::string& path() const noexcept { return path_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string path_;
    std::string reason_;
};

class HttpStatusError : public Error {
public:
    explicit HttpStatusError(int status);
    int status() const noexcept { return status_; }

private:
    int status_;
};

class MissingSection : public Error {
public:
    explicit MissingSection(std::string name);
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class TooManyCauses : public Error {
public:
    explicit TooManyCauses(std::size_t count);
    std::size_t count() const noexcept { return count_; }

private:
    std::size_t count_;
};

} // namespace omx
