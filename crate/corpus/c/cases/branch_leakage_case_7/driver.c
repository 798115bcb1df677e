#include "driver.h"
#include "zltr.h"

int branch_leakage_case_7(int x, int y, int option);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int option = s[0] % 8;
  CHECK(branch_leakage_case_7(1, 77, option) == (option > 3 ? 2 : 77));
}
