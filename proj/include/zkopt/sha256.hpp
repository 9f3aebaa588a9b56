#pragma once

#include <array>
#include <cstring>

#include "zkopt/common.hpp"

namespace zkopt {

/// FIPS 180-4 SHA-256, used for content-addressing build artifacts.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset() {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        total_ = 0;
        buf_len_ = 0;
    }

    void update(const void* data, size_t len) {
        const u8* p = static_cast<const u8*>(data);
        total_ += len;
        while (len > 0) {
            const size_t take = std::min(len, sizeof(buf_) - buf_len_);
            std::memcpy(buf_ + buf_len_, p, take);
            buf_len_ += take;
            p += take;
            len -= take;
            if (buf_len_ == sizeof(buf_)) {
                compress(buf_);
                buf_len_ = 0;
            }
        }
    }

    std::array<u8, 32> digest() {
        const u64 bit_len = total_ * 8;
        u8 pad = 0x80;
        update(&pad, 1);
        const u8 zero = 0;
        while (buf_len_ != 56)
            update(&zero, 1);
        u8 len_be[8];
        for (int i = 0; i < 8; i++)
            len_be[i] = static_cast<u8>(bit_len >> (56 - 8 * i));
        // Length bytes complete the final block; total_ is now stale but done.
        std::memcpy(buf_ + 56, len_be, 8);
        compress(buf_);
        std::array<u8, 32> out;
        for (int i = 0; i < 8; i++)
            for (int j = 0; j < 4; j++)
                out[i * 4 + j] = static_cast<u8>(state_[i] >> (24 - 8 * j));
        return out;
    }

    static std::string hex(const void* data, size_t len) {
        Sha256 h;
        h.update(data, len);
        const auto d = h.digest();
        static const char* digits = "0123456789abcdef";
        std::string s;
        s.reserve(64);
        for (u8 b : d) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 15]);
        }
        return s;
    }

    static std::string hex(const std::vector<u8>& v) { return hex(v.data(), v.size()); }
    static std::string hex(const std::string& s) { return hex(s.data(), s.size()); }

private:
    static u32 rotr(u32 x, int n) { return (x >> n) | (x << (32 - n)); }

    void compress(const u8* block) {
        static constexpr u32 K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

        u32 w[64];
        for (int i = 0; i < 16; i++)
            w[i] = (static_cast<u32>(block[i * 4]) << 24) |
                   (static_cast<u32>(block[i * 4 + 1]) << 16) |
                   (static_cast<u32>(block[i * 4 + 2]) << 8) |
                   static_cast<u32>(block[i * 4 + 3]);
        for (int i = 16; i < 64; i++) {
            const u32 s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const u32 s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        u32 a = state_[0], b = state_[1], c = state_[2], d = state_[3];
        u32 e = state_[4], f = state_[5], g = state_[6], h = state_[7];
        for (int i = 0; i < 64; i++) {
            const u32 S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const u32 ch = (e & f) ^ (~e & g);
            const u32 t1 = h + S1 + ch + K[i] + w[i];
            const u32 S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const u32 maj = (a & b) ^ (a & c) ^ (b & c);
            const u32 t2 = S0 + maj;
            h = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        state_[0] += a; state_[1] += b; state_[2] += c; state_[3] += d;
        state_[4] += e; state_[5] += f; state_[6] += g; state_[7] += h;
    }

    std::array<u32, 8> state_;
    u64 total_ = 0;
    u8 buf_[64];
    size_t buf_len_ = 0;
};

} // namespace zkopt
