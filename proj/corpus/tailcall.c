/* Hot inner function called from a counted driver loop; the inner state is
 * 64-bit so inlining raises register pressure on a 32-bit target. */

#include "runtime/zkrt.h"

#ifndef N
#define N 200
#endif

static unsigned long long work(unsigned long long x) {
    unsigned long long sum = x;
    for (unsigned long long j = 0; j < 100; j++)
        sum = sum * 31u + j;
    return sum;
}

int main(void) {
    unsigned long long acc = 0;
    for (unsigned int i = 0; i < (unsigned int)N; i++)
        acc ^= work(i);
    zk_print_u32((unsigned int)(acc >> 32));
    zk_print_u32((unsigned int)acc);
    return 0;
}
