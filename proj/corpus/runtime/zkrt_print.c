/* Output formatting shared by the emulated and native builds. */

#include "zkrt.h"

static const char ZKRT_HEX_DIGITS[] = "0123456789abcdef";

void zk_puts(const char* s) {
    unsigned long n = 0;
    while (s[n])
        n++;
    zk_write(s, n);
}

void zk_print_u32(unsigned int value) {
    char buf[9];
    for (int i = 0; i < 8; i++)
        buf[i] = ZKRT_HEX_DIGITS[(value >> (28 - 4 * i)) & 0xf];
    buf[8] = '\n';
    zk_write(buf, 9);
}
