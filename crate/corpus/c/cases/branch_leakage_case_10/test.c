#include "driver.h"

uint8_t branch_leakage_case_10(uint8_t *public_arr, uint8_t public_arr_len, uint8_t *secret_arr, uint8_t i);

int main(void) {
  uint8_t pub[3] = {4, 20, 8}, sec[3] = {1, 1, 1};
  CHECK(branch_leakage_case_10(pub, 3, sec, 1) == 4 + 21);
  CHECK(sec[2] == 21);
  uint8_t sec2[3] = {0, 0, 0};
  CHECK(branch_leakage_case_10(pub, 3, sec2, 2) == 20 + 8);
  puts("ok");
  return 0;
}
