/* In-bounds calls leave temp at 0 (it starts at 0 and is only and-ed or
 * set from a memcmp of equal bytes); out-of-bounds calls must not crash. */
#include <stdio.h>
#include <stdlib.h>

#include "gadgets.h"

#define CHECK(c)                                                   \
  do {                                                             \
    if (!(c)) {                                                    \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #c); \
      exit(1);                                                     \
    }                                                              \
  } while (0)

int main(void) {
  uint32_t safe = 1;
  for (uint32_t i = 0; i < 2 * PUBLICARRAY_SIZE; i++) {
    case_1(i);
    case_2(i);
    case_3(i);
    case_5(i);
    case_6(i);
    case_7(i);
    case_8(i);
    case_10(i, 3);
    case_12(i, 1);
    case_13(i);
    if (i < PUBLICARRAY_SIZE / 2)
      case_4(i);
    if (i < PUBLICARRAY_SIZE)
      case_9(i, &safe);
    CHECK(temp == 0);
  }
  temp = 0;
  case_11gcc(0);
  CHECK(temp == 0);
  case_11ker(0);
  CHECK(temp == 0);
  case_11sub(0);
  CHECK(temp == 0);
  puts("ok");
  return 0;
}
