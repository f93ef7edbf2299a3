// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

#include "wcs/text.hpp"

namespace wcs::lang {

/// A code fence was present but held no content.
class EmptyBlock : public std::runtime_error {
public:
    EmptyBlock() : std::runtime_error("markdown code block is empty") {}
};

/// Returns the content of the first fenced code block; text without fences
/// is returned verbatim. The fence's info string (e.g. ```python) is
/// skipped, and the newline immediately before the closing fence dropped.
inline std::string extract_code_block(const std::string& markdown) {
    const std::string fence = "```";
    const std::size_t open = markdown.find(fence);
    if (open == std::string::npos) return markdown;
    std::size_t content_start = open + fence.size();
    const std::size_t info_newline = markdown.find('\n', content_start);
    const std::size_t same_line_close = markdown.find(fence, content_start);
    if (info_newline != std::string::npos &&
        (same_line_close == std::string::npos || info_newline < same_line_close)) {
        content_start = info_newline + 1;
    }
    std::size_t close = markdown.find(fence, content_start);
    if (close == std::string::npos) close = markdown.size();
    std::string content = markdown.substr(content_start, close - content_start);
    if (!content.empty() && content.back() == '\n') content.pop_back();
    if (trim(content).empty()) throw EmptyBlock{};
    return content;
}

}  // namespace wcs::lang
