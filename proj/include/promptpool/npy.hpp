// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "promptpool/tensor.hpp"

// npy container I/O.
//
// Accepted on read: versions 1.0 and 2.0, dtype '<f4' or '<f8', C-order only.
// Emitted on write: version 1.0, header space-padded with a trailing '\n' so
// the payload starts on a 64-byte boundary. Payload bytes are preserved
// verbatim, so write/read round-trips are bit-exact.

namespace promptpool::npy {

static_assert(std::endian::native == std::endian::little,
              "npy I/O assumes a little-endian host");

using LoadedTensor = std::variant<Tensor<float>, Tensor<double>>;

inline Dtype dtype_of(const LoadedTensor& t) {
    return std::holds_alternative<Tensor<float>>(t) ? Dtype::f32 : Dtype::f64;
}

namespace detail {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// Position just past "'key':" (or "\"key\":"), skipping surrounding spaces.
inline std::size_t value_pos(const std::string& header, const std::string& key,
                             const std::string& path) {
    for (char quote : {'\'', '"'}) {
        const std::string needle = quote + key + quote;
        std::size_t p = header.find(needle);
        if (p == std::string::npos) continue;
        p += needle.size();
        while (p < header.size() && header[p] == ' ') ++p;
        if (p >= header.size() || header[p] != ':') fail(path, "malformed header near '" + key + "'");
        ++p;
        while (p < header.size() && header[p] == ' ') ++p;
        return p;
    }
    fail(path, "malformed header: missing '" + key + "'");
}

inline std::string parse_descr(const std::string& header, const std::string& path) {
    std::size_t p = value_pos(header, "descr", path);
    if (p >= header.size() || (header[p] != '\'' && header[p] != '"')) {
        fail(path, "malformed header: 'descr' is not a string");
    }
    const char quote = header[p++];
    const std::size_t end = header.find(quote, p);
    if (end == std::string::npos) fail(path, "malformed header: unterminated 'descr'");
    return header.substr(p, end - p);
}

inline bool parse_fortran_order(const std::string& header, const std::string& path) {
    const std::size_t p = value_pos(header, "fortran_order", path);
    if (header.compare(p, 4, "True") == 0) return true;
    if (header.compare(p, 5, "False") == 0) return false;
    fail(path, "malformed header: 'fortran_order' is not a bool");
}

inline std::vector<std::size_t> parse_shape(const std::string& header, const std::string& path) {
    std::size_t p = value_pos(header, "shape", path);
    if (p >= header.size() || header[p] != '(') fail(path, "malformed header: 'shape' is not a tuple");
    const std::size_t end = header.find(')', ++p);
    if (end == std::string::npos) fail(path, "malformed header: unterminated 'shape'");

    std::vector<std::size_t> shape;
    while (p < end) {
        while (p < end && (header[p] == ' ' || header[p] == ',')) ++p;
        if (p >= end) break;
        std::size_t digits = 0;
        std::uint64_t v = 0;
        while (p < end && header[p] >= '0' && header[p] <= '9') {
            v = v * 10 + static_cast<std::uint64_t>(header[p] - '0');
            ++p;
            ++digits;
        }
        if (digits == 0) fail(path, "malformed header: bad 'shape' entry");
        shape.push_back(static_cast<std::size_t>(v));
    }
    return shape;
}

template <typename T>
Tensor<T> read_payload(std::ifstream& f, std::vector<std::size_t> shape, std::size_t numel,
                       const std::string& path) {
    std::vector<T> data(numel);
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(numel * sizeof(T)));
    if (static_cast<std::size_t>(f.gcount()) != numel * sizeof(T)) {
        fail(path, "payload shorter than header shape requires");
    }
    f.peek();
    if (!f.eof()) fail(path, "trailing bytes after payload");
    for (std::size_t i = 0; i < numel; ++i) {
        if (!std::isfinite(data[i])) {
            fail(path, "non-finite value at flat index " + std::to_string(i));
        }
    }
    return Tensor<T>(std::move(shape), std::move(data));
}

inline std::string shape_tuple(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return "()";
    if (shape.size() == 1) return "(" + std::to_string(shape[0]) + ",)";
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

}  // namespace detail

/// Loads a '<f4' or '<f8' C-order npy file; payload must be finite.
inline LoadedTensor read_tensor(const std::string& path) {
    using detail::fail;
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open file");

    char preamble[8];
    f.read(preamble, 8);
    if (f.gcount() != 8 || std::memcmp(preamble, detail::kMagic, 6) != 0) {
        fail(path, "malformed header: bad magic");
    }
    const int major = preamble[6];
    const int minor = preamble[7];
    if (!((major == 1 || major == 2) && minor == 0)) {
        fail(path, "unsupported npy version " + std::to_string(major) + "." + std::to_string(minor));
    }

    std::size_t header_len = 0;
    if (major == 1) {
        unsigned char b[2];
        f.read(reinterpret_cast<char*>(b), 2);
        if (f.gcount() != 2) fail(path, "malformed header: truncated length");
        header_len = static_cast<std::size_t>(b[0]) | (static_cast<std::size_t>(b[1]) << 8);
    } else {
        unsigned char b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        if (f.gcount() != 4) fail(path, "malformed header: truncated length");
        header_len = static_cast<std::size_t>(b[0]) | (static_cast<std::size_t>(b[1]) << 8) |
                     (static_cast<std::size_t>(b[2]) << 16) | (static_cast<std::size_t>(b[3]) << 24);
    }

    std::string header(header_len, '\0');
    f.read(header.data(), static_cast<std::streamsize>(header_len));
    if (static_cast<std::size_t>(f.gcount()) != header_len) {
        fail(path, "malformed header: truncated dict");
    }

    const std::string descr = detail::parse_descr(header, path);
    if (detail::parse_fortran_order(header, path)) {
        fail(path, "unsupported layout (fortran_order=True); only C order is accepted");
    }
    std::vector<std::size_t> shape = detail::parse_shape(header, path);
    const std::size_t numel = promptpool::detail::checked_numel(shape);

    if (descr == "<f4") return detail::read_payload<float>(f, std::move(shape), numel, path);
    if (descr == "<f8") return detail::read_payload<double>(f, std::move(shape), numel, path);
    fail(path, "unsupported dtype '" + descr + "' (expected '<f4' or '<f8')");
}

/// Loads a file whose dtype must match T exactly (no conversion).
template <typename T>
Tensor<T> read_tensor_as(const std::string& path) {
    LoadedTensor t = read_tensor(path);
    if (auto* p = std::get_if<Tensor<T>>(&t)) return std::move(*p);
    detail::fail(path, std::string("expected dtype ") + to_string(dtype_traits<T>::value) +
                           ", file holds " + to_string(dtype_of(t)));
}

/// Writes a version-1.0 npy file; payload starts at a 64-byte boundary.
template <typename T>
void write_tensor(const Tensor<T>& t, const std::string& path) {
    using detail::fail;
    const std::string dict = std::string("{'descr': '") + dtype_traits<T>::npy_descr +
                             "', 'fortran_order': False, 'shape': " +
                             detail::shape_tuple(t.shape()) + ", }";
    // preamble(8) + len(2) + dict + padding + '\n', total a multiple of 64
    const std::size_t unpadded = 10 + dict.size() + 1;
    const std::size_t total = (unpadded + 63) / 64 * 64;
    const std::size_t header_len = total - 10;
    if (header_len > 0xffff) fail(path, "header too long for npy v1.0");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(path, "cannot open file for writing");
    f.write(detail::kMagic, 6);
    const char version[2] = {1, 0};
    f.write(version, 2);
    const unsigned char len_le[2] = {static_cast<unsigned char>(header_len & 0xff),
                                     static_cast<unsigned char>((header_len >> 8) & 0xff)};
    f.write(reinterpret_cast<const char*>(len_le), 2);
    f.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    const std::string padding(total - unpadded, ' ');
    f.write(padding.data(), static_cast<std::streamsize>(padding.size()));
    f.put('\n');
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(T)));
    if (!f) fail(path, "write failed");
}

inline void write_tensor(const LoadedTensor& t, const std::string& path) {
    std::visit([&](const auto& x) { write_tensor(x, path); }, t);
}

}  // namespace promptpool::npy
