#include "driver.h"

char branch_leakage_case_8(unsigned char *a, unsigned char *b);
#define TYPE unsigned char

int main(void) {
  unsigned char a[16] = {1, 2, 3}, b[16] = {1, 2, 3};
  CHECK(branch_leakage_case_8(a, b) == 1);
  b[9] = 1;
  CHECK(branch_leakage_case_8(a, b) == 0);
  puts("ok");
  return 0;
}
