#include <stdint.h>

uint8_t *branch_leakage_case_11(uint8_t *a, int n) {
    int i, j, temp;
    for (i = 0; i < n - 1; ++i)
        for (j = 0; j < n - 1 - i; ++j)
            if (a[j] > a[j + 1]) {
                temp = a[j + 1];
                a[j + 1] = a[j];
                a[j] = temp;
            }
    return a;
}
