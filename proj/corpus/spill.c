/* Wide expression kernel with many simultaneously-live scalars. */

#include "runtime/zkrt.h"

#ifndef N
#define N 1500
#endif

int main(void) {
    unsigned int s0 = 1, s1 = 2, s2 = 3, s3 = 4, s4 = 5, s5 = 6, s6 = 7, s7 = 8;
    unsigned int s8 = 9, s9 = 10, s10 = 11, s11 = 12;
    for (unsigned int i = 0; i < (unsigned int)N; i++) {
        s0 += s11 ^ i;
        s1 += s0 >> 3;
        s2 ^= s1 + 0x9e3779b9u;
        s3 += s2 * 5u;
        s4 ^= s3 >> 7;
        s5 += s4 + i;
        s6 ^= s5 * 3u;
        s7 += s6 >> 1;
        s8 ^= s7 + 0x85ebca6bu;
        s9 += s8 * 9u;
        s10 ^= s9 >> 11;
        s11 += s10 + (i << 2);
    }
    unsigned int out = s0 ^ s1 ^ s2 ^ s3 ^ s4 ^ s5 ^ s6 ^ s7 ^ s8 ^ s9 ^ s10 ^ s11;
    zk_print_u32(out);
    return 0;
}
