#include "driver.h"

int branch_leakage_case_6(int x);

int main(void) {
  CHECK(branch_leakage_case_6(3) == 13);
  CHECK(branch_leakage_case_6(10) == 20);
  CHECK(branch_leakage_case_6(47) == 7);
  puts("ok");
  return 0;
}
