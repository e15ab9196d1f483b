/* Copyright 2026 The sedkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEDKIT_IO_HPP_
#define SEDKIT_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace sedkit::io {

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, creating parent dirs.
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace sedkit::io

#endif  // SEDKIT_IO_HPP_
