#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diarist {

enum class ErrorCode {
    invalid_argument,
    not_found,
    integrity,
    parse,
    io,
    empty_corpus,
    execution_failed,
    extraction_failed,
    provider,
    gateway,
    undefined_result,
    version_mismatch,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace diarist
