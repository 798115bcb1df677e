#include "driver.h"
#include "zltr.h"

uint8_t *memory_leakage_case_4(uint8_t *msg, unsigned len);

NO_INIT

void RunTarget(FILE *input) {
  uint8_t s[SECRET_BYTES];
  read_secret(input, s);
  static const uint8_t map[10] = {52, 48, 55, 51, 56, 54, 50, 49, 57, 53};
  uint8_t *msg = malloc(SECRET_BYTES);
  uint8_t want[SECRET_BYTES];
  zltr_alloc(msg, SECRET_BYTES);
  for (int i = 0; i < SECRET_BYTES; i++) {
    msg[i] = '0' + s[i] % 10;
    want[i] = map[s[i] % 10];
  }
  CHECK(memory_leakage_case_4(msg, SECRET_BYTES) == msg);
  CHECK(memcmp(msg, want, SECRET_BYTES) == 0);
  zltr_free(msg);
  free(msg);
}
