// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace oleo::corpus {

// Lowercases ASCII, splits on whitespace, and emits every ASCII punctuation
// character as its own token. Bytes >= 0x80 are kept inside words untouched.
std::vector<std::string> basic_tokenize(std::string_view text);

// Categories are atomic labels: trimmed, lowercased, never split.
std::string category_token(std::string_view category);

}  // namespace oleo::corpus
