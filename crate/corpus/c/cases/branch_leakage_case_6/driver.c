#include "driver.h"
#include "zltr.h"

int branch_leakage_case_6(int x);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int x = s[0] % 21;
  CHECK(branch_leakage_case_6(x) == (x > 10 ? x % 10 : x + 10));
}
