#include "driver.h"
#include "zltr.h"

int branch_leakage_case_4(int high, unsigned low);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int high = s[0] % 2;
  CHECK(branch_leakage_case_4(high, 5) == (high == 0 ? 5 : 0));
}
