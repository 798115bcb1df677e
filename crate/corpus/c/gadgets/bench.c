/* Cycle harness: bench <iterations> [case...]
 * Prints `case,median_cc,runs` per case. Exit 3 when no serializing
 * timestamp counter is available. */
#define _GNU_SOURCE
#include <sched.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "gadgets.h"

#define WARMUP 1000

#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>
static inline uint64_t tsc_begin(void) {
  _mm_lfence();
  uint64_t t = __rdtsc();
  _mm_lfence();
  return t;
}
static inline uint64_t tsc_end(void) {
  unsigned aux;
  uint64_t t = __rdtscp(&aux);
  _mm_lfence();
  return t;
}
#define HAVE_TSC 1
#else
#define HAVE_TSC 0
static inline uint64_t tsc_begin(void) { return 0; }
static inline uint64_t tsc_end(void) { return 0; }
#endif

static uint32_t safe_flag = 1;
static void run_9(uint32_t i) { case_9(i, &safe_flag); }
static void run_10(uint32_t i) { case_10(i, 3); }
static void run_12(uint32_t i) { case_12(i, 0); }
static void empty(uint32_t i) { (void)i; }

static const struct {
  const char *name;
  void (*fn)(uint32_t);
} CASES[] = {
    {"1", case_1},         {"2", case_2},         {"3", case_3},         {"4", case_4},
    {"5", case_5},         {"6", case_6},         {"7", case_7},         {"8", case_8},
    {"9", run_9},          {"10", run_10},        {"11gcc", case_11gcc}, {"11ker", case_11ker},
    {"11sub", case_11sub}, {"12", run_12},        {"13", case_13},       {"14", case_14},
    {"empty", empty},
};
#define NCASES (sizeof CASES / sizeof CASES[0])

static int cmp_u64(const void *a, const void *b) {
  uint64_t x = *(const uint64_t *)a, y = *(const uint64_t *)b;
  return (x > y) - (x < y);
}

static uint64_t measure(void (*fn)(uint32_t), long iterations, uint64_t *samples) {
  /* in-bounds index; case 4 doubles it and case 14 flips it */
  uint32_t idx = 0;
  for (long i = 0; i < WARMUP; i++)
    fn(idx);
  for (long i = 0; i < iterations; i++) {
    uint64_t t0 = tsc_begin();
    fn(idx);
    uint64_t t1 = tsc_end();
    samples[i] = t1 - t0;
  }
  qsort(samples, iterations, sizeof *samples, cmp_u64);
  return samples[iterations / 2];
}

int main(int argc, char **argv) {
  if (!HAVE_TSC) {
    fprintf(stderr, "no timestamp counter on this architecture\n");
    return 3;
  }
  long iterations = argc > 1 ? atol(argv[1]) : 100000;
  if (iterations <= 0) {
    fprintf(stderr, "usage: %s <iterations> [case...]\n", argv[0]);
    return 2;
  }
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(0, &set);
  if (sched_setaffinity(0, sizeof set, &set) != 0)
    perror("sched_setaffinity");

  uint64_t *samples = malloc(iterations * sizeof *samples);
  if (!samples)
    return 2;
  for (size_t c = 0; c < NCASES; c++) {
    int wanted = argc <= 2;
    for (int a = 2; a < argc; a++)
      wanted |= strcmp(argv[a], CASES[c].name) == 0;
    if (!wanted)
      continue;
    uint64_t m = measure(CASES[c].fn, iterations, samples);
    printf("%s,%llu,%ld\n", CASES[c].name, (unsigned long long)m, iterations);
  }
  free(samples);
  return 0;
}
