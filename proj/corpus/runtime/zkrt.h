#ifndef ZKRT_H
#define ZKRT_H

/* Minimal runtime interface for corpus programs. Programs define main(),
 * print results through zk_write-based helpers, and exit via main's return
 * value. The same interface builds freestanding for the emulated target and
 * natively for wall-clock comparisons. */

#ifdef __cplusplus
extern "C" {
#endif

void zk_write(const void* data, unsigned long len);
void zk_exit(int code) __attribute__((noreturn));

/* zkrt_print.c */
void zk_puts(const char* s);
void zk_print_u32(unsigned int value);   /* 8 hex digits + newline */

#ifdef __cplusplus
}
#endif

#endif /* ZKRT_H */
