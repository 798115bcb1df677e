#include "driver.h"
#include "zltr.h"

int branch_leakage_case_3(char *p, char *q);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  char p[3] = {'a', 'b', 'c'}, q[3] = {'a', 'b', 'c'};
  for (int i = 0; i < 3; i++)
    q[i] ^= (s[0] >> i) & 1;
  CHECK(branch_leakage_case_3(p, q) == ((s[0] & 7) == 0));
}
