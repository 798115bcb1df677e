#include <stdint.h>

uint8_t *branch_leakage_case_12(uint8_t *a, int array_size) {
    int i;
    for (i = 0; i < array_size - 1; ++i) {
        int j, min, temp;
        min = i;
        for (j = i + 1; j < array_size; ++j) {
            if (a[j] < a[min])
                min = j;
        }
        temp = a[i];
        a[i] = a[min];
        a[min] = temp;
    }
    return a;
}
