#include "driver.h"

int32_t *branch_leakage_case_9(int32_t *a);
static uint32_t rev32(uint32_t v) {
  uint32_t r = 0;
  for (int i = 0; i < 32; i++)
    r = (r << 1) | ((v >> i) & 1);
  return r;
}

int main(void) {
  int32_t a[3] = {1, 2, 0x40000000};
  branch_leakage_case_9(a);
  CHECK((uint32_t)a[0] == 2u);
  CHECK((uint32_t)a[1] == 0x40000000u);
  CHECK((uint32_t)a[2] == 0x80000000u);
  puts("ok");
  return 0;
}
