#include "driver.h"

int branch_leakage_case_1(char *pw, char *in);
#define TYPE char

int main(void) {
  char a[16] = "0123456789abcdef", b[16] = "0123456789abcdef";
  CHECK(branch_leakage_case_1(a, b) == 1);
  b[15] = 'x';
  CHECK(branch_leakage_case_1(a, b) == 0);
  b[0] = 'x';
  CHECK(branch_leakage_case_1(a, b) == 0);
  puts("ok");
  return 0;
}
