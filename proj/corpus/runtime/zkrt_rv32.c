/* Freestanding runtime for the emulated rv32im guest: environment calls,
 * string/memory builtins, and the 64-bit integer helpers the 32-bit backend
 * emits calls to. Compiled with -fno-builtin so none of these collapse into
 * calls to themselves. */

#include "zkrt.h"

typedef unsigned int u32;
typedef unsigned long long u64;
typedef long long i64;
typedef unsigned long usize;

void zk_write(const void* data, unsigned long len) {
    register usize a0 __asm__("a0") = 1;
    register const void* a1 __asm__("a1") = data;
    register usize a2 __asm__("a2") = len;
    register usize a7 __asm__("a7") = 64;
    __asm__ volatile("ecall" : "+r"(a0) : "r"(a1), "r"(a2), "r"(a7) : "memory");
}

void zk_exit(int code) {
    register usize a0 __asm__("a0") = (usize)code;
    register usize a7 __asm__("a7") = 93;
    __asm__ volatile("ecall" : : "r"(a0), "r"(a7));
    for (;;)
        ;
}

/* --- mem/str builtins ---------------------------------------------------- */

void* memset(void* dst, int c, usize n) {
    unsigned char* d = (unsigned char*)dst;
    for (usize i = 0; i < n; i++)
        d[i] = (unsigned char)c;
    return dst;
}

void* memcpy(void* dst, const void* src, usize n) {
    unsigned char* d = (unsigned char*)dst;
    const unsigned char* s = (const unsigned char*)src;
    for (usize i = 0; i < n; i++)
        d[i] = s[i];
    return dst;
}

void* memmove(void* dst, const void* src, usize n) {
    unsigned char* d = (unsigned char*)dst;
    const unsigned char* s = (const unsigned char*)src;
    if (d < s) {
        for (usize i = 0; i < n; i++)
            d[i] = s[i];
    } else {
        for (usize i = n; i > 0; i--)
            d[i - 1] = s[i - 1];
    }
    return dst;
}

int memcmp(const void* a, const void* b, usize n) {
    const unsigned char* x = (const unsigned char*)a;
    const unsigned char* y = (const unsigned char*)b;
    for (usize i = 0; i < n; i++)
        if (x[i] != y[i])
            return x[i] < y[i] ? -1 : 1;
    return 0;
}

usize strlen(const char* s) {
    usize n = 0;
    while (s[n])
        n++;
    return n;
}

/* --- 64-bit integer helpers ------------------------------------------------
 * Written against 32-bit halves so they cannot recurse into themselves. */

u64 __muldi3(u64 a, u64 b) {
    u32 al = (u32)a, ah = (u32)(a >> 32);
    u32 bl = (u32)b, bh = (u32)(b >> 32);
    u64 r = (u64)al * bl;
    r += ((u64)(al * bh + ah * bl)) << 32;
    return r;
}

u64 __ashldi3(u64 a, int n) {
    u32 lo = (u32)a, hi = (u32)(a >> 32);
    if (n >= 32)
        return (u64)(lo << (n - 32)) << 32;
    if (n == 0)
        return a;
    return ((u64)((hi << n) | (lo >> (32 - n))) << 32) | (u32)(lo << n);
}

u64 __lshrdi3(u64 a, int n) {
    u32 lo = (u32)a, hi = (u32)(a >> 32);
    if (n >= 32)
        return hi >> (n - 32);
    if (n == 0)
        return a;
    return ((u64)(hi >> n) << 32) | ((hi << (32 - n)) | (lo >> n));
}

i64 __ashrdi3(i64 a, int n) {
    u32 lo = (u32)a;
    int hi = (int)(a >> 32);
    if (n >= 32)
        return (i64)(hi >> 31) << 32 | (u32)(hi >> (n - 32));
    if (n == 0)
        return a;
    return ((i64)(hi >> n) << 32) | (((u32)hi << (32 - n)) | (lo >> n));
}

static u64 udivmod64(u64 n, u64 d, u64* rem) {
    if (d == 0) {
        if (rem)
            *rem = n;
        return ~0ULL;
    }
    u64 q = 0, r = 0;
    for (int i = 63; i >= 0; i--) {
        r = __ashldi3(r, 1) | ((u32)__lshrdi3(n, i) & 1);
        if (r >= d) {
            r -= d;
            q |= __ashldi3(1, i);
        }
    }
    if (rem)
        *rem = r;
    return q;
}

u64 __udivdi3(u64 n, u64 d) { return udivmod64(n, d, 0); }

u64 __umoddi3(u64 n, u64 d) {
    u64 r;
    udivmod64(n, d, &r);
    return r;
}

i64 __divdi3(i64 n, i64 d) {
    int neg = 0;
    u64 un = (u64)n, ud = (u64)d;
    if (n < 0) {
        un = ~un + 1;
        neg = !neg;
    }
    if (d < 0) {
        ud = ~ud + 1;
        neg = !neg;
    }
    u64 q = udivmod64(un, ud, 0);
    return neg ? (i64)(~q + 1) : (i64)q;
}

i64 __moddi3(i64 n, i64 d) {
    u64 un = (u64)n, ud = (u64)d, r;
    int neg = n < 0;
    if (n < 0)
        un = ~un + 1;
    if (d < 0)
        ud = ~ud + 1;
    udivmod64(un, ud, &r);
    return neg ? (i64)(~r + 1) : (i64)r;
}
