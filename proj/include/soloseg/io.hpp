#pragma once

#include <string>

#include "soloseg/mask.hpp"
#include "soloseg/tensor.hpp"

namespace soloseg {

// RLE-JSON interchange document:
//   {"height": H, "width": W,
//    "instances": [{"score": s, "class": c, "counts": [..]}, ...]}
// counts is a column-major run-length encoding starting with a (possibly
// zero) background run. Malformed documents raise std::runtime_error with a
// one-line message naming the offending field.
InstanceSet parse_rle_json(const std::string& text);
std::string to_rle_json(const InstanceSet& set);
InstanceSet read_rle_json(const std::string& path);
void write_rle_json(const InstanceSet& set, const std::string& path);

// Tensor interchange: three 32-bit little-endian extents (height, width,
// channels) followed by height*width*channels 64-bit little-endian reals in
// row-major, channel-fastest order.
Tensor3 read_tensor(const std::string& path);
void write_tensor(const Tensor3& tensor, const std::string& path);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace soloseg
