#include "driver.h"

int branch_leakage_case_7(int x, int y, int option);

int main(void) {
  CHECK(branch_leakage_case_7(0, 9, 0) == 9);
  CHECK(branch_leakage_case_7(0, 9, 4) == 2);
  puts("ok");
  return 0;
}
