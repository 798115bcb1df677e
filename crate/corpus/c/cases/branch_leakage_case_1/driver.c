#include "driver.h"
#include "zltr.h"

int branch_leakage_case_1(char *pw, char *in);
#define TYPE char

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  char pw[SECRET_BYTES], in[SECRET_BYTES];
  int k = s[0] % 17;
  memcpy(pw, s, SECRET_BYTES);
  memcpy(in, s, SECRET_BYTES);
  if (k < SECRET_BYTES)
    in[k] ^= 1;
  CHECK(branch_leakage_case_1((TYPE *)pw, (TYPE *)in) == (k == SECRET_BYTES));
}
