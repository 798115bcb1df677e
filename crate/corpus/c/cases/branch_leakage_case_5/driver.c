#include "driver.h"
#include "zltr.h"

int branch_leakage_case_5(int high, int low);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int high = s[0] % 2;
  CHECK(branch_leakage_case_5(high, 0) == (high == 0 ? 5 : 1));
}
