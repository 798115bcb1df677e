#include "driver.h"
#include "zltr.h"

int memory_leakage_case_1(int x, int y, int option);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  int x = s[0], option = s[1] % 8;
  int want = option > 3 ? 2 : (int[]){0, 2, 1234}[x % 3];
  CHECK(memory_leakage_case_1(x, 1234, option) == want);
}
