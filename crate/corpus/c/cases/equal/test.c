#include "driver.h"

int equal(char *p, char *q);

int main(void) {
  CHECK(equal("abc", "abc") == 1);
  CHECK(equal("abc", "abd") == 0);
  CHECK(equal("xbc", "abc") == 0);
  puts("ok");
  return 0;
}
