// Copyright 2026 The ivc Authors
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

#include <string>
#include <string_view>

#include <json.hpp>

namespace ivc {

using Json = nlohmann::json;

/// Canonical serialization: object keys sorted bytewise, no whitespace,
/// floating-point numbers in shortest round-trip form. Throws
/// std::domain_error on non-finite numbers.
std::string canonical_dump(const Json& value);

/// Appending forms of the above, for serializers that write records
/// field by field.
void canonical_append(const Json& value, std::string& out);
void canonical_append_string(std::string_view text, std::string& out);
void canonical_append_number(double value, std::string& out);

/// Shortest round-trip decimal rendering without exponent, e.g. 12.5 -> "12.5".
std::string shortest_fixed(double value);

/// SHA-256 of the given bytes as 64 lowercase hex characters.
std::string sha256_hex(std::string_view bytes);

}  // namespace ivc
