// CSV assembly (RFC 4180 line endings, 17 significant digits, '.' decimal
// separator) and atomic file output via write-then-rename.

#ifndef MINMAXCBO_CSV_HPP
#define MINMAXCBO_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "minmaxcbo/common.hpp"

namespace mmcbo {

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvBuilder {
public:
    explicit CsvBuilder(std::string_view header) { line(header); }

    CsvBuilder& line(std::string_view full_line) {
        body_ += full_line;
        body_ += "\r\n";
        return *this;
    }

    // Cells are appended with commas; call end_row() to terminate.
    CsvBuilder& cell(std::string_view s) {
        if (cells_in_row_ > 0) body_ += ',';
        body_ += s;
        ++cells_in_row_;
        return *this;
    }
    CsvBuilder& cell(double v) { return cell(format_real(v)); }
    CsvBuilder& cell(int v) { return cell(std::to_string(v)); }
    CsvBuilder& cell(long long v) { return cell(std::to_string(v)); }
    CsvBuilder& end_row() {
        body_ += "\r\n";
        cells_in_row_ = 0;
        return *this;
    }

    const std::string& str() const { return body_; }

private:
    std::string body_;
    int cells_in_row_ = 0;
};

// No partial files: write a sibling temporary, then rename over the target.
inline void write_file_atomic(const std::string& path, std::string_view contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot open output file '" + tmp + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw UsageError("failed writing output file '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw UsageError("failed to move output into place at '" + path + "'");
    }
}

}  // namespace mmcbo

#endif  // MINMAXCBO_CSV_HPP
