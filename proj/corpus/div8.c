/* Signed division by a power of two in a reduction loop. */

#include "runtime/zkrt.h"

#ifndef N
#define N 4096
#endif

static int __attribute__((noinline)) div8(int x) { return x / 8; }

int main(void) {
    unsigned int sum = 0;
    for (int x = -N; x < N; x++)
        sum += (unsigned int)div8(x * 5);
    zk_print_u32(sum);
    return 0;
}
