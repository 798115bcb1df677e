#include <stdint.h>

uint8_t *branch_leakage_case_2(uint8_t *a, int array_size) {
    int i, j, index;
    for (i = 1; i < array_size; ++i) {
        index = a[i];
        for (j = i; j > 0 && a[j - 1] > index; j--)
            a[j] = a[j - 1];
        a[j] = index;
    }
    return a;
}
