#include "driver.h"

int branch_leakage_case_5(int high, int low);

int main(void) {
  CHECK(branch_leakage_case_5(0, 0) == 5);
  CHECK(branch_leakage_case_5(3, 0) == 1);
  CHECK(branch_leakage_case_5(3, 4) == 0);
  puts("ok");
  return 0;
}
