/*
 * Copyright 2026 The Cardforge Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CARDFORGE_IO_H_
#define CARDFORGE_IO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cardforge {

// Throws Error(kIoError) naming the path on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// RFC 4180 style: quoted fields may hold commas, quotes ("") and newlines.
// A leading UTF-8 byte order mark is ignored; blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
// Quotes the field only when it needs it.
std::string csv_escape(std::string_view field);

std::string_view trim(std::string_view text);

}  // namespace cardforge

#endif  // CARDFORGE_IO_H_
