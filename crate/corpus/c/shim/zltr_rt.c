/* Runtime for zltr.h. Must be compiled without coverage flags. */
#include "zltr.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define ALLOC_TAG (1ULL << 63)
#define STACK_TAG (1ULL << 62)
#define MAX_EVENTS (1u << 22)
#define MAX_ALLOCS 256

extern char __executable_start;
extern char _end;

struct event {
  uint8_t kind;
  uint64_t ip, payload, aux;
};

static struct event *events;
static size_t n_events;
static int enabled;
static int overflow;
static uintptr_t stack_anchor;

static struct {
  uintptr_t base;
  size_t size;
  int live;
} allocs[MAX_ALLOCS];
static uint32_t n_allocs;

void zltr_begin(void) {
  volatile char here;
  const char *out = getenv("ZLTR_OUT");
  stack_anchor = (uintptr_t)&here;
  if (!out || !*out || enabled)
    return;
  events = malloc(sizeof(struct event) * MAX_EVENTS);
  if (!events) {
    fprintf(stderr, "zltr: out of memory\n");
    exit(70);
  }
  enabled = 1;
  atexit(zltr_end);
}

static void put64(unsigned char *p, uint64_t v) {
  for (int i = 0; i < 8; i++)
    p[i] = (unsigned char)(v >> (8 * i));
}

void zltr_end(void) {
  if (!enabled)
    return;
  enabled = 0;
  const char *out = getenv("ZLTR_OUT");
  const char *id_s = getenv("ZLTR_INPUT_ID");
  uint32_t id = id_s ? (uint32_t)strtoul(id_s, NULL, 10) : 0;
  FILE *f = fopen(out, "wb");
  if (!f) {
    fprintf(stderr, "zltr: cannot write %s\n", out);
    _Exit(74);
  }
  unsigned char hdr[10] = {'Z', 'L', 'T', 'R', 1, 0};
  for (int i = 0; i < 4; i++)
    hdr[6 + i] = (unsigned char)(id >> (8 * i));
  fwrite(hdr, 1, sizeof hdr, f);
  unsigned char rec[25];
  for (size_t i = 0; i < n_events; i++) {
    rec[0] = events[i].kind;
    put64(rec + 1, events[i].ip);
    put64(rec + 9, events[i].payload);
    put64(rec + 17, events[i].aux);
    fwrite(rec, 1, sizeof rec, f);
  }
  if (fclose(f) != 0 || overflow) {
    fprintf(stderr, overflow ? "zltr: event buffer overflow\n" : "zltr: write failed\n");
    _Exit(74);
  }
  free(events);
}

void zltr_emit(uint8_t kind, uint64_t ip, uint64_t payload, uint64_t aux) {
  if (!enabled)
    return;
  if (n_events == MAX_EVENTS) {
    overflow = 1;
    return;
  }
  events[n_events++] = (struct event){kind, ip, payload, aux};
}

uint32_t zltr_alloc(const void *ptr, size_t size) {
  if (n_allocs == MAX_ALLOCS)
    return UINT32_MAX;
  uint32_t id = n_allocs++;
  allocs[id].base = (uintptr_t)ptr;
  allocs[id].size = size;
  allocs[id].live = 1;
  zltr_emit(ZLTR_ALLOC, 0, id, size);
  return id;
}

void zltr_free(const void *ptr) {
  for (uint32_t i = 0; i < n_allocs; i++) {
    if (allocs[i].live && allocs[i].base == (uintptr_t)ptr) {
      allocs[i].live = 0;
      zltr_emit(ZLTR_FREE, 0, i, 0);
      return;
    }
  }
}

uint64_t zltr_normalize(const void *addr) {
  uintptr_t a = (uintptr_t)addr;
  for (uint32_t i = 0; i < n_allocs; i++) {
    if (allocs[i].live && a - allocs[i].base < allocs[i].size)
      return ALLOC_TAG | ((uint64_t)i << 32) | (uint64_t)(a - allocs[i].base);
  }
  uintptr_t lo = (uintptr_t)&__executable_start, hi = (uintptr_t)&_end;
  if (a >= lo && a < hi)
    return a - lo;
  /* the stack grows down from the anchor; allow a small margin above it */
  if (stack_anchor && a <= stack_anchor + 4096 && stack_anchor - a < (64u << 20))
    return STACK_TAG | (uint64_t)(stack_anchor + 4096 - a);
  return a;
}

/* call-site offset: the callback returns to just after a 5-byte call */
#define CALLER_IP() ((uint64_t)((uintptr_t)__builtin_return_address(0) - 5 - (uintptr_t)&__executable_start))

void __sanitizer_cov_trace_pc(void) { zltr_emit(ZLTR_BRANCH, CALLER_IP(), 1, 0); }

#define LOAD(n, t) \
  void __sanitizer_cov_load##n(t *a) { zltr_emit(ZLTR_MEM_READ, CALLER_IP(), zltr_normalize(a), 0); }
#define STORE(n, t) \
  void __sanitizer_cov_store##n(t *a) { zltr_emit(ZLTR_MEM_WRITE, CALLER_IP(), zltr_normalize(a), 0); }
LOAD(1, uint8_t)
LOAD(2, uint16_t)
LOAD(4, uint32_t)
LOAD(8, uint64_t)
LOAD(16, void)
STORE(1, uint8_t)
STORE(2, uint16_t)
STORE(4, uint32_t)
STORE(8, uint64_t)
STORE(16, void)
