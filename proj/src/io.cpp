#include "msfm/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msfm {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s)
        if (c != '"') out += c;
    return out + "\"";
}

} // namespace

bool parse_double(const std::string& text, double& out) {
    const std::string s = trim(text);
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

LabeledPanel load_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);

    std::vector<std::vector<std::string>> rows;
    std::vector<Index> line_no;
    std::string line;
    Index n_line = 0;
    while (std::getline(in, line)) {
        ++n_line;
        if (trim(line).empty()) continue;
        rows.push_back(split_csv_line(line));
        line_no.push_back(n_line);
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, "empty file " + path, 1, 1);

    const std::vector<std::string>& header = rows.front();
    bool has_date = header.front().empty() || lower(header.front()) == "date";
    double probe = 0.0;
    if (rows.size() > 1 && !parse_double(rows[1].front(), probe)) has_date = true;

    const std::size_t first_col = has_date ? 1 : 0;
    if (header.size() <= first_col) throw Error(ErrorCode::ParseError, "no series columns", line_no[0], 1);

    std::vector<std::string> headers(header.begin() + static_cast<std::ptrdiff_t>(first_col), header.end());
    std::vector<std::string> dates;
    const Index n = static_cast<Index>(headers.size());
    const Index t_len = static_cast<Index>(rows.size()) - 1;

    Matrix data(t_len, n);
    for (Index t = 0; t < t_len; ++t) {
        const auto& cells = rows[static_cast<std::size_t>(t) + 1];
        const Index file_line = line_no[static_cast<std::size_t>(t) + 1];
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << "expected " << header.size() << " cells, found " << cells.size();
            throw Error(ErrorCode::ParseError, msg.str(), file_line,
                        static_cast<Index>(std::min(cells.size(), header.size())) + 1);
        }
        if (has_date) dates.push_back(cells.front());
        for (Index i = 0; i < n; ++i) {
            const std::size_t c = first_col + static_cast<std::size_t>(i);
            if (!parse_double(cells[c], data(t, i)))
                throw Error(ErrorCode::ParseError, "not a number: '" + cells[c] + "'", file_line,
                            static_cast<Index>(c) + 1);
        }
    }
    return {validate_panel(std::move(data)), std::move(headers), std::move(dates)};
}

void write_panel_csv(const std::string& path, const Matrix& data, const std::vector<std::string>& headers,
                     const std::vector<std::string>& dates) {
    if (static_cast<Index>(headers.size()) != data.cols())
        throw Error(ErrorCode::DimensionMismatch, "one header per column required");
    if (!dates.empty() && static_cast<Index>(dates.size()) != data.rows())
        throw Error(ErrorCode::DimensionMismatch, "one date per row required");

    std::ostringstream out;
    if (!dates.empty()) out << "date,";
    for (std::size_t i = 0; i < headers.size(); ++i) out << (i ? "," : "") << quote_if_needed(headers[i]);
    out << '\n';
    for (Index t = 0; t < data.rows(); ++t) {
        if (!dates.empty()) out << quote_if_needed(dates[static_cast<std::size_t>(t)]) << ',';
        for (Index i = 0; i < data.cols(); ++i) out << (i ? "," : "") << format_double(data(t, i));
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    Index n_line = 0;
    while (std::getline(in, line)) {
        ++n_line;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "expected key = value", n_line);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::ParseError, "empty key", n_line);
        if (!out.emplace(key, trim(line.substr(eq + 1))).second)
            throw Error(ErrorCode::ParseError, "duplicate key '" + key + "'", n_line);
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

} // namespace msfm
