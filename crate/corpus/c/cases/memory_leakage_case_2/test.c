#include "driver.h"

int memory_leakage_case_2(int key);

int main(void) {
  CHECK(memory_leakage_case_2(0) == 0x52 + 0x52);
  CHECK(memory_leakage_case_2(3) == 0x52 + 0x7F);
  CHECK(memory_leakage_case_2(15) == 0x52 + 0x37);
  CHECK(memory_leakage_case_2(21) == 0x52 + 0x5A);
  puts("ok");
  return 0;
}
