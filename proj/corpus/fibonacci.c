/* Iterative Fibonacci with a modulus step, wrapping at 32 bits. */

#include "runtime/zkrt.h"

#ifndef N
#define N 4000
#endif

int main(void) {
    unsigned int a = 0, b = 1;
    for (unsigned int i = 0; i < (unsigned int)N; i++) {
        unsigned int t = (a + b) % 1000000007u;
        a = b;
        b = t;
    }
    zk_print_u32(a);
    return 0;
}
