/* Touches a configurable number of distinct chunk-sized regions with one
 * store each; a direct paging-pressure stressor. */

#include "runtime/zkrt.h"

#ifndef PAGES
#define PAGES 24
#endif

static unsigned char arena[PAGES * 1024];

int main(void) {
    for (int r = 0; r < 4; r++)
        for (int p = 0; p < PAGES; p++)
            arena[p * 1024 + (r * 8)] = (unsigned char)(p + r);
    unsigned int sum = 0;
    for (int p = 0; p < PAGES; p++)
        sum = sum * 33u + arena[p * 1024];
    zk_print_u32(sum);
    return 0;
}
