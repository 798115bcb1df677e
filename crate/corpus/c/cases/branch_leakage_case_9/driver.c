#include "driver.h"
#include "zltr.h"

int32_t *branch_leakage_case_9(int32_t *a);
static uint32_t rev32(uint32_t v) {
  uint32_t r = 0;
  for (int i = 0; i < 32; i++)
    r = (r << 1) | ((v >> i) & 1);
  return r;
}

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int32_t a[3];
  uint32_t in[3];
  memcpy(in, s, sizeof in);
  memcpy(a, s, sizeof a);
  CHECK(branch_leakage_case_9(a) == a);
  CHECK((uint32_t)a[0] == rev32(in[2]));
  CHECK((uint32_t)a[1] == rev32(in[1]));
  CHECK((uint32_t)a[2] == rev32(in[0]));
}
