#include "diarist/csv.hpp"

#include "diarist/error.hpp"

namespace diarist {

bool CsvReader::next(CsvRecord& record) {
    record.fields.clear();
    record.line = line_;
    if (in_.peek() == std::char_traits<char>::eof()) return false;

    std::string field;
    bool quoted = false;
    bool after_quote = false;
    int ch;
    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
        const char c = static_cast<char>(ch);
        if (quoted) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                    after_quote = true;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }
        if (c == ',') {
            record.fields.push_back(std::move(field));
            field.clear();
            after_quote = false;
        } else if (c == '\r' && in_.peek() == '\n') {
            continue;
        } else if (c == '\n') {
            ++line_;
            record.fields.push_back(std::move(field));
            return true;
        } else if (c == '"' && field.empty() && !after_quote) {
            quoted = true;
        } else {
            if (after_quote) {
                throw Error(ErrorCode::parse,
                            "line " + std::to_string(line_) + ": characters after closing quote");
            }
            field.push_back(c);
        }
    }
    if (quoted) {
        throw Error(ErrorCode::parse, "line " + std::to_string(record.line) + ": unterminated quoted field");
    }
    record.fields.push_back(std::move(field));
    return true;
}

}  // namespace diarist
