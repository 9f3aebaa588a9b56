/* The same initialization split into two loops, each with its own control. */

#include "runtime/zkrt.h"

#ifndef N
#define N 4096
#endif

static int a[N], b[N];

int main(void) {
    for (int r = 0; r < 8; r++) {
        for (int i = 0; i < N; i++)
            a[i] = 1;
        for (int i = 0; i < N; i++)
            b[i] = 2;
    }
    unsigned int check = 0;
    for (int i = 0; i < N; i += 97)
        check += (unsigned int)(a[i] + b[i] * 3);
    zk_print_u32(check);
    return 0;
}
