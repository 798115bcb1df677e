#include <stddef.h>
#include <stdint.h>
#include <string.h>

#include "gadgets.h"

/* INLINE_LFENCE builds the source-level barrier variant, INDEX_MASK the
 * index-masking one. */
#if defined(INLINE_LFENCE)
#define FENCE() asm volatile("lfence" ::: "memory")
#elif defined(INDEX_MASK)
#define FENCE() (idx &= PUBLICARRAY_SIZE - 1)
#else
#define FENCE() ((void)0)
#endif

uint32_t publicarray_size = PUBLICARRAY_SIZE;
uint8_t publicarray[PUBLICARRAY_SIZE] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
uint8_t publicarray2[512 * 256] = {20};
volatile uint8_t temp = 0;

void case_1(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    temp &= publicarray2[publicarray[idx] * 512];
  }
}

static void leakByteLocalFunction(uint8_t k) { temp &= publicarray2[(k) * 512]; }
void case_2(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    leakByteLocalFunction(publicarray[idx]);
  }
}

__attribute__((noinline)) static void leakByteNoinlineFunction(uint8_t k) { temp &= publicarray2[(k) * 512]; }
void case_3(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    leakByteNoinlineFunction(publicarray[idx]);
  }
}

void case_4(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    temp &= publicarray2[publicarray[idx << 1] * 512];
  }
}

void case_5(uint32_t idx) {
  int32_t i;
  if (idx < publicarray_size) {
    FENCE();
    for (i = idx - 1; i >= 0; i--)
      temp &= publicarray2[publicarray[i] * 512];
  }
}

uint32_t array_size_mask = PUBLICARRAY_SIZE - 1;
void case_6(uint32_t idx) {
  if ((idx & array_size_mask) == idx) {
    FENCE();
    temp &= publicarray2[publicarray[idx] * 512];
  }
}

void case_7(uint32_t idx) {
  static uint32_t last_idx = 0;
  if (idx == last_idx) {
    FENCE();
    temp &= publicarray2[publicarray[idx] * 512];
  }
  if (idx < publicarray_size)
    last_idx = idx;
}

/* no source-level barrier fits inside the ternary */
void case_8(uint32_t idx) { temp &= publicarray2[publicarray[idx < publicarray_size ? (idx + 1) : 0] * 512]; }

void case_9(uint32_t idx, uint32_t *x_is_safe) {
  if (*x_is_safe) {
    FENCE();
    temp &= publicarray2[publicarray[idx] * 512];
  }
}

void case_10(uint32_t idx, uint8_t k) {
  if (idx < publicarray_size) {
    FENCE();
    if (publicarray[idx] == k)
      temp &= publicarray2[0];
  }
}

void case_11gcc(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    temp = memcmp((const void *)&temp, publicarray2 + (publicarray[idx] * 512), 1);
  }
}

static int mem_cmp_kernel(const void *cs, const void *ct, size_t count) {
  const unsigned char *su1, *su2;
  int res = 0;
  for (su1 = cs, su2 = ct; 0 < count; ++su1, ++su2, count--)
    if ((res = *su1 - *su2) != 0)
      break;
  return res;
}
void case_11ker(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    temp = mem_cmp_kernel((const void *)&temp, publicarray2 + (publicarray[idx] * 512), 1);
  }
}

static int mem_cmp_sub(const void *cs, const void *ct, size_t count) {
  const unsigned char *su1 = cs, *su2 = ct;
  int res = 0;
  while (count-- > 0 && res == 0)
    res = *su1++ - *su2++;
  return res;
}
void case_11sub(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    temp = mem_cmp_sub((const void *)&temp, publicarray2 + (publicarray[idx] * 512), 1);
  }
}

void case_12(uint32_t idx, uint8_t y) {
  if ((idx + y) < publicarray_size) {
    FENCE();
    temp &= publicarray2[publicarray[idx + y] * 512];
  }
}

static inline int is_idx_safe(uint32_t idx) {
  if (idx < publicarray_size)
    return 1;
  return 0;
}
void case_13(uint32_t idx) {
  if (is_idx_safe(idx)) {
    FENCE();
    temp &= publicarray2[publicarray[idx] * 512];
  }
}

void case_14(uint32_t idx) {
  if (idx < publicarray_size) {
    FENCE();
    temp &= publicarray2[publicarray[idx ^ 255] * 512];
  }
}
