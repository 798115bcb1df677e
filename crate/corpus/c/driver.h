#ifndef CORPUS_DRIVER_H
#define CORPUS_DRIVER_H

#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define SECRET_BYTES 16

static void read_secret(FILE *input, uint8_t s[SECRET_BYTES]) {
  if (fread(s, 1, SECRET_BYTES, input) != SECRET_BYTES) {
    fprintf(stderr, "secret input too short\n");
    exit(2);
  }
}

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      exit(1);                                                       \
    }                                                                \
  } while (0)

/* Default init: nothing to set up. */
#define NO_INIT \
  void InitTarget(FILE *input) { (void)input; }

#endif
