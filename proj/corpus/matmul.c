/* Small dense matrix-vector products, integer arithmetic. */

#include "runtime/zkrt.h"

#ifndef ROUNDS
#define ROUNDS 400
#endif

#define DIM 5

static int mat[DIM][DIM];
static int vec[DIM];

int main(void) {
    unsigned int seed = 99;
    for (int i = 0; i < DIM; i++) {
        for (int j = 0; j < DIM; j++) {
            seed = seed * 1103515245u + 12345u;
            mat[i][j] = (int)(seed >> 16) % 64;
        }
        vec[i] = (int)(i + 1);
    }
    unsigned int acc = 0;
    for (int r = 0; r < ROUNDS; r++) {
        int res[DIM] = {0};
        for (int col = 0; col < DIM; col++)
            for (int row = 0; row < DIM; row++)
                res[row] += mat[col][row] * vec[col];
        for (int i = 0; i < DIM; i++)
            acc = acc * 31u + (unsigned int)res[i];
        vec[r % DIM] ^= (int)(acc & 7);
    }
    zk_print_u32(acc);
    return 0;
}
