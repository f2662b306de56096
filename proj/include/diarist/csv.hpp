#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace diarist {

struct CsvRecord {
    std::vector<std::string> fields;
    // 1-based line on which the record starts.
    std::size_t line = 0;
};

// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
// quoted fields may span lines. CRLF and LF line endings are accepted.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    bool next(CsvRecord& record);

private:
    std::istream& in_;
    std::size_t line_ = 1;
};

}  // namespace diarist
