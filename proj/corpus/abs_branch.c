/* Absolute-value reduction with a data-dependent branch in the kernel. */

#include "runtime/zkrt.h"

#ifndef N
#define N 2048
#endif

static int values[N];

int main(void) {
    unsigned int seed = 0x2545f491u;
    for (int i = 0; i < N; i++) {
        seed = seed * 1664525u + 1013904223u;
        values[i] = (int)seed;
    }
    unsigned int sum = 0;
    for (int r = 0; r < 16; r++)
        for (int i = 0; i < N; i++) {
            int v = values[i];
            if (v < 0)
                v = -v;
            sum += (unsigned int)v;
        }
    zk_print_u32(sum);
    return 0;
}
