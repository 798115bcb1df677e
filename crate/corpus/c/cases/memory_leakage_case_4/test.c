#include "driver.h"

uint8_t *memory_leakage_case_4(uint8_t *msg, unsigned len);

int main(void) {
  uint8_t msg[] = "0123456789";
  memory_leakage_case_4(msg, 10);
  CHECK(memcmp(msg, "4073862195", 10) == 0);
  puts("ok");
  return 0;
}
