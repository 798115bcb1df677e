#include "driver.h"

int memory_leakage_case_3(int secret);

int main(void) {
  CHECK(memory_leakage_case_3(0) == 0);
  CHECK(memory_leakage_case_3(1) == 200 % 128);
  CHECK(memory_leakage_case_3(5) == 1000 % 128);
  puts("ok");
  return 0;
}
