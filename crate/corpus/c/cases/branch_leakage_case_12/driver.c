#include "driver.h"
#include "zltr.h"

uint8_t *branch_leakage_case_12(uint8_t *a, int array_size);
static int cmp_u8(const void *x, const void *y) { return *(const uint8_t *)x - *(const uint8_t *)y; }


NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  uint8_t a[SECRET_BYTES], want[SECRET_BYTES];
  memcpy(a, s, SECRET_BYTES);
  memcpy(want, s, SECRET_BYTES);
  qsort(want, SECRET_BYTES, 1, cmp_u8);
  CHECK(branch_leakage_case_12(a, SECRET_BYTES) == a);
  CHECK(memcmp(a, want, SECRET_BYTES) == 0);
}
