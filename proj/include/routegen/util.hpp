// Copyright 2026 The routegen Authors
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

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace routegen {

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: temp file then rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written by index; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body);

/// Renders a real with `decimals` fixed decimals ("-0.000" becomes "0.000").
std::string format_fixed(double value, int decimals);

}  // namespace routegen
