#include "chakra/core/codec.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <regex>

#include "chakra/core/validate.h"
#include "json.hpp"

namespace chakra {
namespace {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON

ojson float_to_json(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

ojson value_to_json(const AttributeValue& value) {
  return std::visit(
      [](const auto& v) -> ojson {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return float_to_json(v);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          ojson arr = ojson::array();
          for (double d : v) arr.push_back(float_to_json(d));
          return arr;
        } else {
          return v;
        }
      },
      value);
}

ojson trace_to_json(const Trace& trace) {
  ojson doc;
  doc["schema_version"] = trace.schema_version;
  doc["npu_id"] = trace.npu_id;
  ojson nodes = ojson::array();
  for (const auto& node : canonical(trace).nodes) {
    ojson n;
    n["id"] = node.id;
    n["name"] = node.name;
    n["type"] = to_string(node.type);
    n["parents"] = node.parents;
    ojson attrs = ojson::array();
    for (const auto& a : node.attributes) {
      ojson j;
      j["name"] = a.name;
      j["kind"] = to_string(a.kind);
      j["doc_string"] = a.doc_string;
      j["value"] = value_to_json(a.value);
      attrs.push_back(std::move(j));
    }
    n["attributes"] = std::move(attrs);
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

[[noreturn]] void json_fail(const std::string& path, const std::string& what) {
  throw DecodeError("JSON decode error at " + path + ": " + what,
                    std::nullopt, path);
}

const ojson& member(const ojson& obj, const char* key,
                    const std::string& path) {
  if (!obj.is_object()) json_fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) json_fail(path, std::string("missing field '") + key + "'");
  return *it;
}

std::string as_string(const ojson& j, const std::string& path) {
  if (!j.is_string()) json_fail(path, "expected a string");
  return j.get<std::string>();
}

uint64_t as_u64(const ojson& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<uint64_t>();
  if (j.is_number_integer() && j.get<int64_t>() >= 0) {
    return static_cast<uint64_t>(j.get<int64_t>());
  }
  json_fail(path, "expected a non-negative integer");
}

int64_t as_i64(const ojson& j, const std::string& path) {
  if (j.is_number_integer() && !j.is_number_unsigned()) return j.get<int64_t>();
  if (j.is_number_unsigned()) {
    uint64_t u = j.get<uint64_t>();
    if (u <= static_cast<uint64_t>(std::numeric_limits<int64_t>::max())) {
      return static_cast<int64_t>(u);
    }
  }
  json_fail(path, "expected a 64-bit integer");
}

double as_f64(const ojson& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  json_fail(path, "expected a number");
}

const ojson& as_array(const ojson& j, const std::string& path) {
  if (!j.is_array()) json_fail(path, "expected an array");
  return j;
}

AttributeValue value_from_json(const ojson& j, AttributeKind kind,
                               const std::string& path) {
  auto repeated = [&](auto convert) {
    using T = decltype(convert(j, path));
    std::vector<T> out;
    const auto& arr = as_array(j, path);
    out.reserve(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) {
      out.push_back(convert(arr[i], path + "/" + std::to_string(i)));
    }
    return out;
  };
  try {
    switch (kind) {
      case AttributeKind::kFloat: return as_f64(j, path);
      case AttributeKind::kInt: return as_i64(j, path);
      case AttributeKind::kString: return as_string(j, path);
      case AttributeKind::kFloats: return repeated(as_f64);
      case AttributeKind::kInts: return repeated(as_i64);
      case AttributeKind::kStrings: return repeated(as_string);
    }
  } catch (const DecodeError& e) {
    throw DecodeError(std::string(e.what()) + " (attribute kind/value mismatch)",
                      std::nullopt, e.json_path());
  }
  json_fail(path, "unknown attribute kind");
}

Trace trace_from_json(const ojson& doc) {
  Trace trace;
  trace.schema_version = as_string(member(doc, "schema_version", ""),
                                   "/schema_version");
  auto version = parse_schema_version(trace.schema_version);
  if (!version) {
    json_fail("/schema_version",
              "malformed schema_version '" + trace.schema_version + "'");
  }
  if (version->major > kSchemaMajor) {
    json_fail("/schema_version",
              "unknown schema_version '" + trace.schema_version + "'");
  }
  uint64_t npu = as_u64(member(doc, "npu_id", ""), "/npu_id");
  if (npu > std::numeric_limits<uint32_t>::max()) {
    json_fail("/npu_id", "npu_id out of range");
  }
  trace.npu_id = static_cast<uint32_t>(npu);

  const auto& nodes = as_array(member(doc, "nodes", ""), "/nodes");
  trace.nodes.reserve(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    const std::string np = "/nodes/" + std::to_string(i);
    const ojson& n = nodes[i];
    ETNode node;
    node.id = as_u64(member(n, "id", np), np + "/id");
    node.name = as_string(member(n, "name", np), np + "/name");
    auto type_name = as_string(member(n, "type", np), np + "/type");
    auto type = parse_node_type(type_name);
    if (!type) json_fail(np + "/type", "unknown NodeType '" + type_name + "'");
    node.type = *type;
    const auto& parents = as_array(member(n, "parents", np), np + "/parents");
    for (size_t p = 0; p < parents.size(); ++p) {
      node.parents.push_back(
          as_u64(parents[p], np + "/parents/" + std::to_string(p)));
    }
    const auto& attrs =
        as_array(member(n, "attributes", np), np + "/attributes");
    for (size_t a = 0; a < attrs.size(); ++a) {
      const std::string ap = np + "/attributes/" + std::to_string(a);
      Attribute attribute;
      attribute.name = as_string(member(attrs[a], "name", ap), ap + "/name");
      auto kind_name = as_string(member(attrs[a], "kind", ap), ap + "/kind");
      auto kind = parse_attribute_kind(kind_name);
      if (!kind) {
        json_fail(ap + "/kind", "unknown AttributeKind '" + kind_name + "'");
      }
      attribute.kind = *kind;
      auto doc_it = attrs[a].find("doc_string");
      if (doc_it != attrs[a].end()) {
        attribute.doc_string = as_string(*doc_it, ap + "/doc_string");
      }
      attribute.value =
          value_from_json(member(attrs[a], "value", ap), *kind, ap + "/value");
      node.attributes.push_back(std::move(attribute));
    }
    trace.nodes.push_back(std::move(node));
  }
  return canonical(std::move(trace));
}

// ---------------------------------------------------------------------------
// Binary

class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) { le(v); }
  void u64(uint64_t v) { le(v); }
  void i64(int64_t v) { le(static_cast<uint64_t>(v)); }
  void f64(double v) { le(std::bit_cast<uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const void* p, size_t n) {
    auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t>& bytes() { return buf_; }

 private:
  template <typename T>
  void le(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const uint8_t> bytes, size_t base = 0)
      : bytes_(bytes), base_(base) {}

  size_t offset() const { return base_ + pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

  void need(size_t n, std::string_view what) {
    if (remaining() < n) {
      throw DecodeError("binary stream truncated at byte offset " +
                            std::to_string(base_ + bytes_.size()) +
                            " while reading " + std::string(what) +
                            " at offset " + std::to_string(offset()) +
                            " (needed " + std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()) + ")",
                        base_ + bytes_.size(), "");
    }
  }
  uint8_t u8(std::string_view what) {
    need(1, what);
    return bytes_[pos_++];
  }
  uint32_t u32(std::string_view what) { return le<uint32_t>(what); }
  uint64_t u64(std::string_view what) { return le<uint64_t>(what); }
  int64_t i64(std::string_view what) {
    return static_cast<int64_t>(le<uint64_t>(what));
  }
  double f64(std::string_view what) {
    return std::bit_cast<double>(le<uint64_t>(what));
  }
  std::string str(std::string_view what) {
    uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const uint8_t> take(size_t n, std::string_view what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  // Bounds a repeated-field count by the bytes that could possibly hold it.
  size_t count(size_t min_item_size, std::string_view what) {
    uint32_t n = u32(what);
    if (min_item_size > 0 && n > remaining() / min_item_size) {
      need(static_cast<size_t>(n) * min_item_size, what);
    }
    return n;
  }

 private:
  template <typename T>
  T le(std::string_view what) {
    need(sizeof(T), what);
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::span<const uint8_t> bytes_;
  size_t base_;
  size_t pos_ = 0;
};

[[noreturn]] void binary_fail(size_t offset, const std::string& what) {
  throw DecodeError("binary decode error at byte offset " +
                        std::to_string(offset) + ": " + what,
                    offset, "");
}

void write_value(Writer& w, const AttributeValue& value) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          w.f64(v);
        } else if constexpr (std::is_same_v<T, int64_t>) {
          w.i64(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          w.str(v);
        } else {
          w.u32(static_cast<uint32_t>(v.size()));
          for (const auto& item : v) {
            if constexpr (std::is_same_v<T, std::vector<double>>) {
              w.f64(item);
            } else if constexpr (std::is_same_v<T, std::vector<int64_t>>) {
              w.i64(item);
            } else {
              w.str(item);
            }
          }
        }
      },
      value);
}

std::vector<uint8_t> encode_record(const ETNode& node) {
  Writer w;
  w.u64(node.id);
  w.str(node.name);
  w.u8(static_cast<uint8_t>(node.type));
  w.u32(static_cast<uint32_t>(node.parents.size()));
  for (uint64_t p : node.parents) w.u64(p);
  w.u32(static_cast<uint32_t>(node.attributes.size()));
  for (const auto& a : node.attributes) {
    w.str(a.name);
    w.u8(static_cast<uint8_t>(a.kind));
    w.str(a.doc_string);
    write_value(w, a.value);
  }
  return std::move(w.bytes());
}

AttributeValue read_value(Reader& r, AttributeKind kind) {
  switch (kind) {
    case AttributeKind::kFloat: return r.f64("float value");
    case AttributeKind::kInt: return r.i64("int value");
    case AttributeKind::kString: return r.str("string value");
    case AttributeKind::kFloats: {
      std::vector<double> v(r.count(8, "float list"));
      for (auto& d : v) d = r.f64("float list item");
      return v;
    }
    case AttributeKind::kInts: {
      std::vector<int64_t> v(r.count(8, "int list"));
      for (auto& i : v) i = r.i64("int list item");
      return v;
    }
    case AttributeKind::kStrings: {
      std::vector<std::string> v(r.count(4, "string list"));
      for (auto& s : v) s = r.str("string list item");
      return v;
    }
  }
  return int64_t{0};
}

ETNode decode_record(Reader& r) {
  ETNode node;
  node.id = r.u64("node id");
  node.name = r.str("node name");
  size_t type_offset = r.offset();
  uint8_t type = r.u8("node type");
  if (type >= std::size(kAllNodeTypes)) {
    binary_fail(type_offset, "unknown NodeType tag " + std::to_string(type));
  }
  node.type = static_cast<NodeType>(type);
  node.parents.resize(r.count(8, "parent list"));
  for (auto& p : node.parents) p = r.u64("parent id");
  size_t n_attrs = r.count(10, "attribute list");
  node.attributes.reserve(n_attrs);
  for (size_t i = 0; i < n_attrs; ++i) {
    Attribute a;
    a.name = r.str("attribute name");
    size_t kind_offset = r.offset();
    uint8_t kind = r.u8("attribute kind");
    if (kind > static_cast<uint8_t>(AttributeKind::kStrings)) {
      binary_fail(kind_offset, "unknown AttributeKind tag " +
                                   std::to_string(kind));
    }
    a.kind = static_cast<AttributeKind>(kind);
    a.doc_string = r.str("attribute doc_string");
    a.value = read_value(r, a.kind);
    node.attributes.push_back(std::move(a));
  }
  return node;
}

std::vector<uint8_t> encode_binary(const Trace& trace) {
  Writer w;
  w.raw(kBinaryMagic, sizeof(kBinaryMagic));
  w.u8(kBinaryFormatVersion);
  w.str(trace.schema_version);
  w.u32(trace.npu_id);
  w.u64(trace.nodes.size());
  for (const auto& node : canonical(trace).nodes) {
    auto record = encode_record(node);
    w.u32(static_cast<uint32_t>(record.size()));
    w.raw(record.data(), record.size());
  }
  return std::move(w.bytes());
}

Trace decode_binary(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(sizeof(kBinaryMagic), "magic");
  if (!std::equal(magic.begin(), magic.end(),
                  reinterpret_cast<const uint8_t*>(kBinaryMagic))) {
    binary_fail(0, "bad magic (expected \"CHKET\\0\")");
  }
  uint8_t format_version = r.u8("format version");
  if (format_version != kBinaryFormatVersion) {
    binary_fail(6, "unsupported binary format version " +
                       std::to_string(format_version));
  }
  Trace trace;
  size_t version_offset = r.offset();
  trace.schema_version = r.str("schema_version");
  auto version = parse_schema_version(trace.schema_version);
  if (!version) {
    binary_fail(version_offset,
                "malformed schema_version '" + trace.schema_version + "'");
  }
  if (version->major > kSchemaMajor) {
    binary_fail(version_offset,
                "unknown schema_version '" + trace.schema_version + "'");
  }
  trace.npu_id = r.u32("npu_id");
  uint64_t count = r.u64("node count");
  trace.nodes.reserve(std::min<uint64_t>(count, r.remaining() / 4));
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t length = r.u32("record length");
    size_t record_offset = r.offset();
    Reader record(r.take(length, "node record"), record_offset);
    trace.nodes.push_back(decode_record(record));
    if (record.remaining() != 0) {
      binary_fail(record.offset(), "trailing bytes inside node record " +
                                       std::to_string(i));
    }
  }
  if (r.remaining() != 0) {
    binary_fail(r.offset(), "trailing bytes after last node record");
  }
  return canonical(std::move(trace));
}

}  // namespace

DecodeError::DecodeError(std::string what, std::optional<size_t> offset,
                         std::string json_path)
    : Error(std::move(what)), offset_(offset), json_path_(std::move(json_path)) {}

std::optional<Format> parse_format(std::string_view name) {
  if (name == "json") return Format::kJson;
  if (name == "binary" || name == "bin") return Format::kBinary;
  return std::nullopt;
}

std::vector<uint8_t> encode_trace(const Trace& trace, Format format) {
  require_valid(trace, "encode_trace");
  if (format == Format::kBinary) return encode_binary(trace);
  std::string text = trace_to_json(trace).dump(2) + "\n";
  return {text.begin(), text.end()};
}

Trace decode_trace(std::span<const uint8_t> bytes, Format format) {
  if (format == Format::kBinary) return decode_binary(bytes);
  ojson doc;
  try {
    doc = ojson::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what(), e.byte, "");
  }
  return trace_from_json(doc);
}

Format sniff_format(std::span<const uint8_t> bytes) {
  if (bytes.size() >= sizeof(kBinaryMagic) &&
      std::memcmp(bytes.data(), kBinaryMagic, sizeof(kBinaryMagic)) == 0) {
    return Format::kBinary;
  }
  return Format::kJson;
}

std::string trace_file_name(std::string_view prefix, uint32_t npu_id) {
  return std::string(prefix) + "." + std::to_string(npu_id) + ".et";
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

void write_trace_file(const std::filesystem::path& path, const Trace& trace,
                      Format format) {
  write_file_bytes(path, encode_trace(trace, format));
}

Trace read_trace_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_trace(bytes, sniff_format(bytes));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what(), e.offset(),
                      e.json_path());
  }
}

std::vector<std::filesystem::path> write_trace_set(
    const std::filesystem::path& dir, std::string_view prefix,
    std::span<const Trace> traces, Format format) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& t : traces) {
    auto path = dir / trace_file_name(prefix, t.npu_id);
    write_trace_file(path, t, format);
    written.push_back(path);
  }
  return written;
}

std::vector<Trace> read_trace_dir(const std::filesystem::path& dir) {
  static const std::regex kName(R"((.+)\.(\d+)\.et)");
  if (!std::filesystem::is_directory(dir)) {
    throw Error(dir.string() + " is not a directory");
  }
  std::map<uint32_t, std::filesystem::path> files;
  std::optional<std::string> prefix;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, kName)) continue;
    if (prefix && *prefix != m[1].str()) {
      throw Error("mixed trace prefixes in " + dir.string() + ": '" + *prefix +
                  "' and '" + m[1].str() + "'");
    }
    prefix = m[1].str();
    files[static_cast<uint32_t>(std::stoul(m[2].str()))] = entry.path();
  }
  if (files.empty()) throw Error("no .et files in " + dir.string());
  std::vector<Trace> traces;
  uint32_t expected = 0;
  for (const auto& [npu, path] : files) {
    if (npu != expected) {
      throw Error("missing trace for npu " + std::to_string(expected) +
                  " in " + dir.string());
    }
    ++expected;
    Trace t = read_trace_file(path);
    if (t.npu_id != npu) {
      throw Error(path.string() + ": npu_id " + std::to_string(t.npu_id) +
                  " does not match file name");
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

}  // namespace chakra
