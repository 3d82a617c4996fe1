// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "specfold/common.hpp"

namespace specfold {

/// CRC-64/XZ (ECMA-182 polynomial, reflected, init/xorout all-ones).
/// Check value: crc64("123456789") == 0x995dc9bbdf1939fa.
class Crc64 {
public:
    Crc64() : crc_(~0ull) {}

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        std::uint64_t c = crc_;
        for (std::size_t i = 0; i < len; ++i)
            c = table()[(c ^ p[i]) & 0xff] ^ (c >> 8);
        crc_ = c;
    }

    std::uint64_t value() const { return ~crc_; }

    static std::uint64_t of(const void* data, std::size_t len) {
        Crc64 c;
        c.update(data, len);
        return c.value();
    }

private:
    static const std::array<std::uint64_t, 256>& table() {
        static const std::array<std::uint64_t, 256> t = [] {
            // reflected form of the ECMA-182 polynomial
            constexpr std::uint64_t poly = 0xc96c5795d7870f42ull;
            std::array<std::uint64_t, 256> tab{};
            for (std::uint64_t i = 0; i < 256; ++i) {
                std::uint64_t c = i;
                for (int k = 0; k < 8; ++k)
                    c = (c & 1) ? poly ^ (c >> 1) : (c >> 1);
                tab[i] = c;
            }
            return tab;
        }();
        return t;
    }

    std::uint64_t crc_;
};

/// Little-endian binary writer that mirrors every byte into a running CRC.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IngestError("cannot open for writing: " + path);
        path_ = path;
    }

    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        raw(&v, sizeof(T));
    }

    void put_string(const std::string& s) {
        put<std::uint64_t>(s.size());
        raw(s.data(), s.size());
    }

    void put_f32(const float* p, std::size_t count) { raw(p, count * sizeof(float)); }
    void put_f64(const double* p, std::size_t count) { raw(p, count * sizeof(double)); }
    void put_bytes(const void* p, std::size_t count) { raw(p, count); }

    std::uint64_t crc() const { return crc_.value(); }

    /// Appends the running CRC (not itself CRC'd) and closes.
    void finish_with_crc() {
        std::uint64_t c = crc_.value();
        out_.write(reinterpret_cast<const char*>(&c), sizeof(c));
        close();
    }

    /// Idempotent; throws if any buffered write failed to reach disk.
    void close() {
        if (!out_.is_open()) return;
        out_.close();
        if (!out_) throw IngestError("write failed: " + path_);
    }

private:
    void raw(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        crc_.update(p, n);
    }

    std::ofstream out_;
    std::string path_;
    Crc64 crc_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IngestError("cannot open: " + path);
    }

    template <typename T>
    T get() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v;
        raw(&v, sizeof(T));
        return v;
    }

    std::string get_string() {
        auto n = get<std::uint64_t>();
        if (n > (1ull << 32)) throw IngestError("corrupt string length in " + path_);
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

    void get_f32(float* p, std::size_t count) { raw(p, count * sizeof(float)); }
    void get_f64(double* p, std::size_t count) { raw(p, count * sizeof(double)); }

    std::uint64_t crc() const { return crc_.value(); }

    /// Reads the stored CRC and compares to the running one.
    void verify_crc() {
        std::uint64_t expect = crc_.value();
        std::uint64_t stored;
        in_.read(reinterpret_cast<char*>(&stored), sizeof(stored));
        if (!in_ || stored != expect)
            throw IngestError("checksum mismatch in " + path_);
    }

    bool at_eof() {
        in_.peek();
        return in_.eof();
    }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw IngestError("truncated file: " + path_);
        crc_.update(p, n);
    }

    std::ifstream in_;
    std::string path_;
    Crc64 crc_;
};

}  // namespace specfold
