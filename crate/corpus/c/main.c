/* Trace driver entry: argv[1] is the secret input file. */
#include <stdio.h>
#include <stdlib.h>

#include "zltr.h"

extern void InitTarget(FILE *input);
extern void RunTarget(FILE *input);

int main(int argc, char **argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <secret-file>\n", argv[0]);
    return 2;
  }
  FILE *f = fopen(argv[1], "rb");
  if (!f) {
    perror(argv[1]);
    return 2;
  }
  InitTarget(f);
  rewind(f);
  zltr_begin();
  RunTarget(f);
  zltr_end();
  fclose(f);
  return 0;
}
