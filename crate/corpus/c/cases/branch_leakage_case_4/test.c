#include "driver.h"

int branch_leakage_case_4(int high, unsigned low);

int main(void) {
  CHECK(branch_leakage_case_4(0, 7) == 7);
  CHECK(branch_leakage_case_4(1, 7) == 0);
  CHECK(branch_leakage_case_4(0, 0) == 0);
  puts("ok");
  return 0;
}
