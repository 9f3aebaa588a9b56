/* Four-deep nested loop writing a 4-D array. The inner loop is usually
 * empty and its body carries a wide loop-invariant expression, so hoisting
 * trades rarely-executed work for always-executed preheader work plus the
 * register pressure of eight extra live values. PAD positions the frame
 * just under a chunk boundary at baseline. */

#include "runtime/zkrt.h"
#ifndef N
#define N 14
#endif
#ifndef PAD
#define PAD 860
#endif

static int v[N][N][N][N];
static const int wa[16] = {3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59};
static const int wb[16] = {61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137};

int main(void) {
    unsigned char pad[PAD];
    pad[0] = 1;
    pad[PAD - 1] = 2;
    unsigned int seed = 0x1234567u;
    unsigned int acc = 0;
    for (int k = 0; k < N; k++)
        for (int j = 0; j < N; j++)
            for (int i = 0; i < N; i++) {
                seed = seed * 1103515245u + 12345u;
                int kk = wa[k & 15], jj = wb[j & 15], ii = wa[i & 15];
                int lim = ((seed >> 24) & 0xff) < 8 ? 2 : 0;
                for (int l = 0; l < lim; l++) {
                    int s1 = kk * 1103 + jj * 509;
                    int s2 = ii * 257 + (kk ^ jj) * 31;
                    int s3 = (jj ^ ii) * 17 + (kk + ii) * 97;
                    int s4 = kk * jj * 3 + jj * ii * 5;
                    int s5 = kk * ii * 7 + (kk | ii) * 11;
                    int s6 = (jj & kk) * 13 + (ii + jj + kk) * 19;
                    int s7 = (kk - jj) * 23 + (jj - ii) * 29;
                    int s8 = (kk ^ ii) * 37 + (ii | jj) * 43;
                    v[k][j][i][l] = 42 + ((s1 + s2 + s3 + s4 + s5 + s6 + s7 + s8) & 7) + (l ? 0 : 1);
                }
                acc += (unsigned int)lim;
            }
    unsigned int check = acc + pad[0] + pad[PAD - 1];
    for (int k = 0; k < N; k++)
        check += (unsigned int)v[k][k % N][0][N - 1];
    zk_print_u32(check);
    return 0;
}
