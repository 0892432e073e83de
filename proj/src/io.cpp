#include "soloseg/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace soloseg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw std::runtime_error(message); }

std::int64_t require_int(const json& obj, const char* field, std::int64_t min_value) {
  if (!obj.contains(field)) {
    fail(std::string("rle-json: missing field \"") + field + "\"");
  }
  const json& v = obj.at(field);
  if (!v.is_number_integer()) {
    fail(std::string("rle-json: field \"") + field + "\" must be an integer");
  }
  const std::int64_t value = v.get<std::int64_t>();
  if (value < min_value) {
    fail(std::string("rle-json: field \"") + field + "\" must be >= " +
         std::to_string(min_value));
  }
  return value;
}

}  // namespace

InstanceSet parse_rle_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("rle-json: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    fail("rle-json: top level must be an object");
  }
  InstanceSet set;
  set.height = static_cast<int>(require_int(doc, "height", 1));
  set.width = static_cast<int>(require_int(doc, "width", 1));
  if (!doc.contains("instances") || !doc.at("instances").is_array()) {
    fail("rle-json: missing or non-array field \"instances\"");
  }
  for (const json& item : doc.at("instances")) {
    if (!item.is_object()) {
      fail("rle-json: every entry of \"instances\" must be an object");
    }
    Instance inst;
    if (!item.contains("score") || !item.at("score").is_number()) {
      fail("rle-json: missing or non-numeric field \"score\"");
    }
    inst.score = item.at("score").get<double>();
    inst.class_id = static_cast<int>(require_int(item, "class", 0));
    if (!item.contains("counts") || !item.at("counts").is_array()) {
      fail("rle-json: missing or non-array field \"counts\"");
    }
    RleMask rle;
    rle.height = set.height;
    rle.width = set.width;
    for (const json& c : item.at("counts")) {
      if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
        fail("rle-json: field \"counts\" must hold non-negative integers");
      }
      rle.counts.push_back(c.get<std::int64_t>());
    }
    try {
      inst.mask = rle_decode(rle);
    } catch (const std::invalid_argument& e) {
      fail(std::string("rle-json: field \"counts\" invalid: ") + e.what());
    }
    set.instances.push_back(std::move(inst));
  }
  return set;
}

std::string to_rle_json(const InstanceSet& set) {
  json doc;
  doc["height"] = set.height;
  doc["width"] = set.width;
  doc["instances"] = json::array();
  for (const Instance& inst : set.instances) {
    json item;
    item["score"] = inst.score;
    item["class"] = inst.class_id;
    item["counts"] = rle_encode(inst.mask).counts;
    doc["instances"].push_back(std::move(item));
  }
  return doc.dump();
}

InstanceSet read_rle_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail("rle-json: cannot open file \"" + path + "\"");
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_rle_json(text);
}

void write_rle_json(const InstanceSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail("rle-json: cannot open file \"" + path + "\" for writing");
  }
  out << to_rle_json(set) << "\n";
  if (!out) {
    fail("rle-json: write to \"" + path + "\" failed");
  }
}

namespace {

void put_u32_le(std::string& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) {
    buf.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
}

void put_f64_le(std::string& buf, double value) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  for (int b = 0; b < 8; ++b) {
    buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
}

std::uint32_t get_u32_le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) {
    v = (v << 8) | p[b];
  }
  return v;
}

double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) {
    bits = (bits << 8) | p[b];
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

Tensor3 read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail("tensor: cannot open file \"" + path + "\"");
  }
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 12) {
    fail("tensor: file \"" + path + "\" too short for the extents header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint32_t h = get_u32_le(p);
  const std::uint32_t w = get_u32_le(p + 4);
  const std::uint32_t c = get_u32_le(p + 8);
  const std::uint64_t count = static_cast<std::uint64_t>(h) * w * c;
  if (data.size() != 12 + count * 8) {
    fail("tensor: file \"" + path + "\" payload size does not match extents " +
         std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c));
  }
  Tensor3 out(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  double* dst = out.data().data();
  for (std::uint64_t i = 0; i < count; ++i) {
    dst[i] = get_f64_le(p + 12 + i * 8);
  }
  return out;
}

void write_tensor(const Tensor3& tensor, const std::string& path) {
  std::string buf;
  const std::uint64_t count = static_cast<std::uint64_t>(tensor.height()) * tensor.width() *
                              tensor.channels();
  buf.reserve(12 + count * 8);
  put_u32_le(buf, static_cast<std::uint32_t>(tensor.height()));
  put_u32_le(buf, static_cast<std::uint32_t>(tensor.width()));
  put_u32_le(buf, static_cast<std::uint32_t>(tensor.channels()));
  const double* src = tensor.data().data();
  for (std::uint64_t i = 0; i < count; ++i) {
    put_f64_le(buf, src[i]);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail("tensor: cannot open file \"" + path + "\" for writing");
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    fail("tensor: write to \"" + path + "\" failed");
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace soloseg
