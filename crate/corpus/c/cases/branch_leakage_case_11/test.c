#include "driver.h"

uint8_t *branch_leakage_case_11(uint8_t *a, int n);
static int cmp_u8(const void *x, const void *y) { return *(const uint8_t *)x - *(const uint8_t *)y; }


int main(void) {
  uint8_t a[] = {9, 3, 200, 3, 0, 255, 17};
  static const uint8_t want[] = {0, 3, 3, 9, 17, 200, 255};
  branch_leakage_case_11(a, 7);
  CHECK(memcmp(a, want, 7) == 0);
  uint8_t one[] = {4};
  branch_leakage_case_11(one, 1);
  CHECK(one[0] == 4);
  puts("ok");
  return 0;
}
