#include "driver.h"
#include "zltr.h"

int memory_leakage_case_2(int key);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  static const unsigned char lut[16] = {0x52, 0x19, 0x3E, 0x7F, 0x0C, 0x5A, 0x6D, 0x2B,
                                        0x3F, 0x1A, 0x7E, 0x53, 0x6C, 0x5B, 0x0D, 0x37};
  int key = s[0];
  CHECK(memory_leakage_case_2(key) == lut[0] + lut[key % 16]);
}
