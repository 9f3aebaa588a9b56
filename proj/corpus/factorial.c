/* Iterative factorial, wrapping at 32 bits. */

#include "runtime/zkrt.h"

#ifndef N
#define N 12
#endif

int main(void) {
    unsigned int f = 1;
    for (unsigned int rounds = 0; rounds < 64; rounds++)
        for (unsigned int i = 1; i <= (unsigned int)N; i++)
            f *= i;
    zk_print_u32(f);
    return 0;
}
