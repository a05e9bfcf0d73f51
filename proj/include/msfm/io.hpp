#ifndef MSFM_IO_HPP
#define MSFM_IO_HPP

#include "msfm/core_types.hpp"

#include <map>
#include <string>
#include <vector>

namespace msfm {

struct LabeledPanel {
    Panel panel;
    std::vector<std::string> headers;  ///< one per series
    std::vector<std::string> dates;    ///< empty when the file had no date column
};

/// Header row of series names, then one row per period. A leading date
/// column is recognised when the first header cell is empty or "date", or the
/// first data cell does not parse as a number. ParseError reports the 1-based
/// file line and column.
LabeledPanel load_panel_csv(const std::string& path);

/// Writes every value with 17 significant digits.
void write_panel_csv(const std::string& path, const Matrix& data, const std::vector<std::string>& headers,
                     const std::vector<std::string>& dates = {});

/// %.17g.
std::string format_double(double v);

/// Strict decimal parse of the whole string; false on trailing garbage.
bool parse_double(const std::string& text, double& out);

/// Flat "key = value" text, '#' starts a comment. Duplicate keys and lines
/// without '=' raise ParseError with the 1-based line.
std::map<std::string, std::string> load_config_file(const std::string& path);

/// Writes text, throwing Io on failure.
void write_text_file(const std::string& path, const std::string& text);

} // namespace msfm

#endif
