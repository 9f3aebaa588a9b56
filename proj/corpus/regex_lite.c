/* Backtracking matcher for a pattern language with '.', '*', and '^'. */

#include "runtime/zkrt.h"

static int match_here(const char* pat, const char* text);

static int match_star(char c, const char* pat, const char* text) {
    do {
        if (match_here(pat, text))
            return 1;
    } while (*text != '\0' && (*text++ == c || c == '.'));
    return 0;
}

static int match_here(const char* pat, const char* text) {
    if (pat[0] == '\0')
        return 1;
    if (pat[1] == '*')
        return match_star(pat[0], pat + 2, text);
    if (*text != '\0' && (pat[0] == '.' || pat[0] == *text))
        return match_here(pat + 1, text + 1);
    return 0;
}

static int match(const char* pat, const char* text) {
    if (pat[0] == '^')
        return match_here(pat + 1, text);
    do {
        if (match_here(pat, text))
            return 1;
    } while (*text++ != '\0');
    return 0;
}

static const char* const corpus_lines[] = {
    "the quick brown fox jumps over the lazy dog",
    "pack my box with five dozen liquor jugs",
    "how vexingly quick daft zebras jump",
    "sphinx of black quartz judge my vow",
    "the five boxing wizards jump quickly",
};

static const char* const patterns[] = {
    "qu.ck", "j.mp*s", "^the", "z*ebra", "v.w", "q.*z",
};

int main(void) {
    unsigned int hits = 0;
    for (int r = 0; r < 64; r++)
        for (unsigned int p = 0; p < sizeof(patterns) / sizeof(patterns[0]); p++)
            for (unsigned int l = 0; l < sizeof(corpus_lines) / sizeof(corpus_lines[0]); l++)
                hits += (unsigned int)match(patterns[p], corpus_lines[l]);
    zk_print_u32(hits);
    return 0;
}
