#pragma once

// TT3F tensor files and trace CSVs.
//
// TT3F layout (all integers little-endian):
//   offset 0   "TT3F"
//   offset 4   version byte, currently 1
//   offset 5   rows, cols, depth as uint64
//   offset 29  rows*cols*depth IEEE-754 binary64 values, canonical tensor layout

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tkz/solvers.hpp"
#include "tkz/tensor.hpp"

namespace tkz {

inline constexpr std::uint8_t kTt3fVersion = 1;
inline constexpr std::size_t kTt3fHeaderSize = 29;

std::vector<std::uint8_t> encode_tensor(const Tensor3& t);

/// Throws ParseError with the failing byte offset.
Tensor3 decode_tensor(std::span<const std::uint8_t> bytes);

Tensor3 read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor3& t);

inline constexpr const char* kTraceHeader = "epoch,rse,delta,gamma,elapsed_s";

/// CSV text for a trace; empty optionals become empty fields.
std::string format_trace_csv(std::span<const EpochRecord> records);
void write_trace_csv(const std::filesystem::path& path, std::span<const EpochRecord> records);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tkz
