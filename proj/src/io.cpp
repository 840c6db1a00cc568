#include "tkz/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace tkz {

namespace {

static_assert(std::endian::native == std::endian::little, "TT3F codec assumes a little-endian host");

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor3& t) {
    std::vector<std::uint8_t> out;
    out.reserve(kTt3fHeaderSize + 8 * t.size());
    for (char c : {'T', 'T', '3', 'F'}) out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(kTt3fVersion);
    put_u64(out, t.rows());
    put_u64(out, t.cols());
    put_u64(out, t.depth());
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

Tensor3 decode_tensor(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw ParseError("TT3F: truncated magic", bytes.size());
    for (std::size_t i = 0; i < 4; ++i) {
        if (bytes[i] != static_cast<std::uint8_t>("TT3F"[i])) throw ParseError("TT3F: bad magic", i);
    }
    if (bytes.size() < 5) throw ParseError("TT3F: missing version", bytes.size());
    if (bytes[4] != kTt3fVersion) throw ParseError("TT3F: unsupported version " + std::to_string(bytes[4]), 4);

    std::uint64_t dims[3];
    for (std::size_t d = 0; d < 3; ++d) {
        const std::size_t at = 5 + 8 * d;
        if (bytes.size() < at + 8) throw ParseError("TT3F: truncated header", bytes.size());
        dims[d] = get_u64(bytes, at);
    }

    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 8;
    std::uint64_t count = 1;
    for (std::size_t d = 0; d < 3; ++d) {
        if (dims[d] != 0 && count > limit / dims[d]) throw ParseError("TT3F: dimensions overflow", 5 + 8 * d);
        count *= dims[d];
    }
    const std::uint64_t expected = kTt3fHeaderSize + 8 * count;
    if (bytes.size() < expected) {
        // Report the start of the first value that is not fully present.
        const std::uint64_t complete = (bytes.size() - kTt3fHeaderSize) / 8;
        throw ParseError("TT3F: truncated payload, expected " + std::to_string(count) + " values",
                         kTt3fHeaderSize + 8 * complete);
    }
    if (bytes.size() > expected) throw ParseError("TT3F: trailing bytes", expected);

    std::vector<double> values(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t at = kTt3fHeaderSize + 8 * i;
        values[i] = std::bit_cast<double>(get_u64(bytes, at));
        if (!std::isfinite(values[i])) throw ParseError("TT3F: non-finite value", at);
    }
    return Tensor3(dims[0], dims[1], dims[2], std::move(values));
}

Tensor3 read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

void write_tensor(const std::filesystem::path& path, const Tensor3& t) {
    const auto bytes = encode_tensor(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

std::string format_trace_csv(std::span<const EpochRecord> records) {
    std::string out = kTraceHeader;
    out += '\n';
    auto field = [&](const std::optional<double>& v) {
        if (v) out += format_double(*v);
    };
    for (const auto& r : records) {
        out += std::to_string(r.epoch);
        out += ',';
        field(r.rse);
        out += ',';
        field(r.delta);
        out += ',';
        field(r.gamma);
        out += ',';
        out += format_double(r.elapsed_s);
        out += '\n';
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_trace_csv(const std::filesystem::path& path, std::span<const EpochRecord> records) {
    write_text(path, format_trace_csv(records));
}

}  // namespace tkz
