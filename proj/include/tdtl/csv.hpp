#pragma once

#include <string>
#include <vector>

namespace tdtl::csv {

/// Splits one CSV line, honoring double-quote quoting with "" escapes.
std::vector<std::string> split_line(const std::string& line);

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(const std::string& field);

std::string join(const std::vector<std::string>& fields);

}  // namespace tdtl::csv
