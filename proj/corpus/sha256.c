/* SHA-256 over a small buffer, repeated; a crypto-kernel workload. */

#include "runtime/zkrt.h"

#ifndef ROUNDS
#define ROUNDS 8
#endif

typedef unsigned int u32;
typedef unsigned long long u64;

static u32 rotr(u32 x, int n) { return (x >> n) | (x << (32 - n)); }

static const u32 K[64] = {
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

typedef struct {
    u32 h[8];
    unsigned char block[64];
    u64 total;
    unsigned fill;
} sha256_ctx;

static void sha256_init(sha256_ctx* c) {
    static const u32 iv[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                              0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    for (int i = 0; i < 8; i++)
        c->h[i] = iv[i];
    c->total = 0;
    c->fill = 0;
}

static void sha256_compress(sha256_ctx* c) {
    u32 w[64];
    for (int i = 0; i < 16; i++)
        w[i] = ((u32)c->block[4 * i] << 24) | ((u32)c->block[4 * i + 1] << 16) |
               ((u32)c->block[4 * i + 2] << 8) | (u32)c->block[4 * i + 3];
    for (int i = 16; i < 64; i++) {
        u32 s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
        u32 s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    u32 a = c->h[0], b = c->h[1], d = c->h[3], e = c->h[4];
    u32 f = c->h[5], g = c->h[6], h = c->h[7], cc = c->h[2];
    for (int i = 0; i < 64; i++) {
        u32 S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
        u32 ch = (e & f) ^ (~e & g);
        u32 t1 = h + S1 + ch + K[i] + w[i];
        u32 S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
        u32 maj = (a & b) ^ (a & cc) ^ (b & cc);
        u32 t2 = S0 + maj;
        h = g; g = f; f = e; e = d + t1;
        d = cc; cc = b; b = a; a = t1 + t2;
    }
    c->h[0] += a; c->h[1] += b; c->h[2] += cc; c->h[3] += d;
    c->h[4] += e; c->h[5] += f; c->h[6] += g; c->h[7] += h;
}

static void sha256_update(sha256_ctx* c, const void* data, unsigned len) {
    const unsigned char* p = (const unsigned char*)data;
    c->total += len;
    while (len > 0) {
        unsigned take = 64 - c->fill;
        if (take > len)
            take = len;
        for (unsigned i = 0; i < take; i++)
            c->block[c->fill + i] = p[i];
        c->fill += take;
        p += take;
        len -= take;
        if (c->fill == 64) {
            sha256_compress(c);
            c->fill = 0;
        }
    }
}

static void sha256_final(sha256_ctx* c, unsigned char out[32]) {
    u64 bits = c->total * 8;
    unsigned char pad = 0x80;
    sha256_update(c, &pad, 1);
    unsigned char zero = 0;
    while (c->fill != 56)
        sha256_update(c, &zero, 1);
    unsigned char len[8];
    for (int i = 0; i < 8; i++)
        len[i] = (unsigned char)(bits >> (56 - 8 * i));
    for (int i = 0; i < 8; i++)
        c->block[56 + i] = len[i];
    c->fill = 64;
    sha256_compress(c);
    for (int i = 0; i < 8; i++)
        for (int j = 0; j < 4; j++)
            out[4 * i + j] = (unsigned char)(c->h[i] >> (24 - 8 * j));
}

int main(void) {
    unsigned char msg[128];
    for (int i = 0; i < 128; i++)
        msg[i] = (unsigned char)(i * 7 + 3);
    unsigned char digest[32] = {0};
    for (int r = 0; r < ROUNDS; r++) {
        sha256_ctx c;
        sha256_init(&c);
        sha256_update(&c, msg, sizeof msg);
        sha256_update(&c, digest, 32);
        sha256_final(&c, digest);
    }
    u32 head = ((u32)digest[0] << 24) | ((u32)digest[1] << 16) |
               ((u32)digest[2] << 8) | (u32)digest[3];
    zk_print_u32(head);
    return 0;
}
