// Copyright 2026 The ngrpo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NGRPO_TEXT_FORMAT_H_
#define NGRPO_TEXT_FORMAT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ngrpo {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// Strict parse of a full string as a double; throws DataError on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
// Digits only; no sign.
std::uint64_t parse_uint(std::string_view text, std::string_view what);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split_whitespace(std::string_view text);

// Number of UTF-8 code points in `text` (lead bytes counted).
std::size_t utf8_length(std::string_view text);
// Prefix of `text` holding at most `max_chars` code points.
std::string_view utf8_truncate(std::string_view text, std::size_t max_chars);

}  // namespace ngrpo

#endif  // NGRPO_TEXT_FORMAT_H_
