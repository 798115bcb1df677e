#include <stdint.h>

uint8_t branch_leakage_case_10(uint8_t *public_arr, uint8_t public_arr_len, uint8_t *secret_arr, uint8_t i) {
    uint8_t x = public_arr[i];
    for (int j = 0; j < public_arr_len; j++) {
        secret_arr[j] += x;
    }
    if (x > 10) {
        return public_arr[0] + secret_arr[0];
    } else {
        return public_arr[1] + secret_arr[1];
    }
}
