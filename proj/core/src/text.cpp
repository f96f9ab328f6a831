#include "vigil/text.hpp"

#include "vigil/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vigil {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::ProbeUnavailable: return "ProbeUnavailable";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::WrongWindowLength: return "WrongWindowLength";
    case ErrorCode::OutOfOrderSample: return "OutOfOrderSample";
    case ErrorCode::UnknownVersion: return "UnknownVersion";
    case ErrorCode::CorruptBundle: return "CorruptBundle";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

std::string format_value(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    if (std::strpbrk(buf, "eE") == nullptr) return buf;

    // %.6g fell back to scientific notation; reprint the already-rounded
    // value in fixed notation instead.
    const double rounded = std::strtod(buf, nullptr);
    if (std::fabs(rounded) >= 1e6) {
        std::snprintf(buf, sizeof(buf), "%.0f", rounded);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.*f", 24, rounded);
    std::string out = buf;
    while (out.size() > 1 && out.back() == '0') out.pop_back();
    if (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

double parse_double(std::string_view field, const char* context) {
    if (field.empty())
        raise(ErrorCode::MalformedRow, std::string(context) + ": empty numeric field");
    char buf[128];
    if (field.size() >= sizeof(buf))
        raise(ErrorCode::MalformedRow, std::string(context) + ": oversized numeric field");
    std::memcpy(buf, field.data(), field.size());
    buf[field.size()] = '\0';
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(buf, &end);
    if (end != buf + field.size() || errno == ERANGE)
        raise(ErrorCode::MalformedRow,
              std::string(context) + ": not a number: '" + std::string(field) + "'");
    return value;
}

std::int64_t parse_int(std::string_view field, const char* context) {
    if (field.empty())
        raise(ErrorCode::MalformedRow, std::string(context) + ": empty integer field");
    char buf[64];
    if (field.size() >= sizeof(buf))
        raise(ErrorCode::MalformedRow, std::string(context) + ": oversized integer field");
    std::memcpy(buf, field.data(), field.size());
    buf[field.size()] = '\0';
    char* end = nullptr;
    errno = 0;
    const long long value = std::strtoll(buf, &end, 10);
    if (end != buf + field.size() || errno == ERANGE)
        raise(ErrorCode::MalformedRow,
              std::string(context) + ": not an integer: '" + std::string(field) + "'");
    return static_cast<std::int64_t>(value);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find('\n', start);
        std::string_view line;
        if (pos == std::string_view::npos) {
            line = text.substr(start);
            start = text.size() + 1;
        } else {
            line = text.substr(start, pos - start);
            start = pos + 1;
        }
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) raise(ErrorCode::IoError, "read failed: " + path);
    return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) raise(ErrorCode::IoError, "write failed: " + path);
}

} // namespace vigil
