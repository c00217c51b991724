#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

enum class Format { kJson, kBinary };

std::optional<Format> parse_format(std::string_view name);

// Binary framing:
//   "CHKET\0" | u8 format version | str schema_version | u32 npu_id |
//   u64 node count | { u32 record length | record }*
// All integers little-endian; str = u32 length + bytes. A record is
//   u64 id | str name | u8 type | u32 n | u64 parent* | u32 m | attribute*
// and an attribute is
//   str name | u8 kind | str doc_string | value
// where the value layout follows the kind (f64 / i64 / str, or u32 count +
// items for the repeated kinds).
inline constexpr char kBinaryMagic[6] = {'C', 'H', 'K', 'E', 'T', '\0'};
inline constexpr uint8_t kBinaryFormatVersion = 1;

class EncodeError : public Error {
 public:
  using Error::Error;
};

// Carries either a byte offset (binary) or a JSON pointer path (JSON).
class DecodeError : public Error {
 public:
  DecodeError(std::string what, std::optional<size_t> offset,
              std::string json_path);
  std::optional<size_t> offset() const { return offset_; }
  const std::string& json_path() const { return json_path_; }

 private:
  std::optional<size_t> offset_;
  std::string json_path_;
};

// Encodes nodes in ascending id order. Output is a pure function of the
// trace value. Throws InvalidTraceError for traces that fail validation.
std::vector<uint8_t> encode_trace(const Trace& trace, Format format);

// Returns nodes in ascending id order.
Trace decode_trace(std::span<const uint8_t> bytes, Format format);

// Binary when the magic matches, JSON otherwise.
Format sniff_format(std::span<const uint8_t> bytes);

// `<prefix>.<npu_id>.et`
std::string trace_file_name(std::string_view prefix, uint32_t npu_id);

void write_trace_file(const std::filesystem::path& path, const Trace& trace,
                      Format format);
Trace read_trace_file(const std::filesystem::path& path);

// Writes one file per trace into `dir` (created if absent).
std::vector<std::filesystem::path> write_trace_set(
    const std::filesystem::path& dir, std::string_view prefix,
    std::span<const Trace> traces, Format format);

// Reads every `<prefix>.<n>.et` file in `dir`, returning the traces ordered
// by npu_id. All files must share one prefix and cover npu ids 0..N-1.
std::vector<Trace> read_trace_dir(const std::filesystem::path& dir);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const uint8_t> bytes);

}  // namespace chakra
