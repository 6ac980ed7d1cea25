#include "omx/errors.hpp"

namespace omx {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::UnknownMetric: return "UnknownMetric";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownStatSpec: return "UnknownStatSpec";
    case ErrorCode::BadThreshold: return "BadThreshold";
    case ErrorCode::MissingMetric: return "MissingMetric";
    case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::SynonymKindViolation: return "SynonymKindViolation";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateModelId: return "DuplicateModelId";
    case ErrorCode::UnknownSeed: return "UnknownSeed";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptGraphFile: return "CorruptGraphFile";
    case ErrorCode::UnknownTrigger: return "UnknownTrigger";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::DuplicateTool: return "DuplicateTool";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ConnectionError: return "ConnectionError";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::TooManyCauses: return "TooManyCauses";
    case ErrorCode::NoCauses: return "NoCauses";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code), detail_(detail) {}

MalformedRecord::MalformedRecord(std::size_t line_no, const std::string& reason)
    : Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + reason),
      line_no_(line_no) {}

InsufficientData::InsufficientData(std::size_t needed, std::size_t got, const std::string& what)
    : Error(ErrorCode::InsufficientData,
            (what.empty() ? std::string() : what + ": ") + "needed " + std::to_string(needed) +
                ", got " + std::to_string(got)),
      needed_(needed), got_(got) {}

SchemaError::SchemaError(std::string path, std::string reason)
    : Error(ErrorCode::SchemaError, path + ": " + reason), path_(std::move(path)),
      reason_(std::move(reason)) {}

HttpStatusError::HttpStatusError(int status)
    : Error(ErrorCode::HttpStatus, "HTTP " + std::to_string(status)), status_(status) {}

MissingSection::MissingSection(std::string name)
    : Error(ErrorCode::MissingSection, name), name_(std::move(name)) {}

TooManyCauses::TooManyCauses(std::size_t count)
    : Error(ErrorCode::TooManyCauses, std::to_string(count) + " causes (max 5)"), count_(count) {}

} // namespace omx
