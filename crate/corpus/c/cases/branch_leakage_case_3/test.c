#include "driver.h"

int branch_leakage_case_3(char *p, char *q);

int main(void) {
  CHECK(branch_leakage_case_3("abc", "abc") == 1);
  CHECK(branch_leakage_case_3("abc", "abd") == 0);
  CHECK(branch_leakage_case_3("abc", "xbc") == 0);
  puts("ok");
  return 0;
}
