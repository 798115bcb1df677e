#include "driver.h"

int memory_leakage_case_1(int x, int y, int option);

int main(void) {
  CHECK(memory_leakage_case_1(0, 7, 0) == 0);
  CHECK(memory_leakage_case_1(1, 7, 1) == 2);
  CHECK(memory_leakage_case_1(5, 7, 2) == 7);
  CHECK(memory_leakage_case_1(5, 7, 4) == 2);
  puts("ok");
  return 0;
}
