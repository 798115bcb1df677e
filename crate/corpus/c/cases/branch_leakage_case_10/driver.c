#include "driver.h"
#include "zltr.h"

uint8_t branch_leakage_case_10(uint8_t *public_arr, uint8_t public_arr_len, uint8_t *secret_arr, uint8_t i);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  uint8_t pub[10] = {3, 15, 7, 22, 1, 9, 12, 30, 5, 11};
  uint8_t sec[SECRET_BYTES];
  memcpy(sec, s, SECRET_BYTES);
  uint8_t i = s[0] % 10, x = pub[i];
  uint8_t want = x > 10 ? (uint8_t)(pub[0] + (uint8_t)(s[0] + x)) : (uint8_t)(pub[1] + (uint8_t)(s[1] + x));
  CHECK(branch_leakage_case_10(pub, 10, sec, i) == want);
}
