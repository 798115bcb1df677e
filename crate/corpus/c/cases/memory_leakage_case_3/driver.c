#include "driver.h"
#include "zltr.h"

int memory_leakage_case_3(int secret);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int secret = s[0];
  CHECK(memory_leakage_case_3(secret) == (200 * secret) % 128);
}
