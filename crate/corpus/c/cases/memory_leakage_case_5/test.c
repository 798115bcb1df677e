#include "driver.h"

int memory_leakage_case_5(int secret);

int main(void) {
  CHECK(memory_leakage_case_5(0) == 0);
  CHECK(memory_leakage_case_5(9) == 9);
  CHECK(memory_leakage_case_5(15) == 15);
  puts("ok");
  return 0;
}
