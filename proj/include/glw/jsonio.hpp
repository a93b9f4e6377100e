#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "glw/tensor.hpp"

namespace glw {

using Json = nlohmann::ordered_json;

// Serializes with doubles printed at 17 significant digits (lossless decimal
// round-trip for IEEE f64), fixed key order, no locale dependence. Every
// artifact file goes through this so repeated runs are byte-identical.
std::string dump_json(const Json& j, int indent = 2);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

std::string format_double(double v);  // %.17g

// CSV with a header row; numbers at 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Tensor& rows);
// Returns the matrix; header_out receives the column names.
Tensor read_csv(const std::string& path, std::vector<std::string>* header_out = nullptr);

// FNV-1a 64-bit content digest, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace glw
