#include "diarist/error.hpp"
#include "diarist/hash.hpp"

#include <array>

namespace diarist {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::empty_corpus: return "empty_corpus";
    case ErrorCode::execution_failed: return "execution_failed";
    case ErrorCode::extraction_failed: return "extraction_failed";
    case ErrorCode::provider: return "provider";
    case ErrorCode::gateway: return "gateway";
    case ErrorCode::undefined_result: return "undefined_result";
    case ErrorCode::version_mismatch: return "version_mismatch";
    }
    return "unknown";
}

std::string to_hex(std::uint64_t value) {
    static constexpr std::array<char, 16> kDigits = {'0', '1', '2', '3', '4', '5', '6', '7',
                                                     '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
        value >>= 4;
    }
    return out;
}

}  // namespace diarist
