/* Running sum over a counted loop. */

#include "runtime/zkrt.h"

#ifndef N
#define N 4096
#endif

int main(void) {
    unsigned int sum = 0;
    for (unsigned int i = 0; i < (unsigned int)N; i++)
        sum += i * 3u + 1u;
    zk_print_u32(sum);
    return 0;
}
