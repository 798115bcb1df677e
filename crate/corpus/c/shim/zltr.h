/* Tracing shim writing ZLTR trace files.
 *
 * Two ways to instrument:
 *  - compile the target file with clang
 *    -fsanitize-coverage=trace-pc,trace-loads,trace-stores
 *    and link zltr_rt.c; ips are call-site offsets from the image base.
 *  - use the TRACE_* macros below; ips are source line numbers.
 *
 * ZLTR_OUT names the output file (tracing is off when unset),
 * ZLTR_INPUT_ID the input id written in the header.
 */
#ifndef ZLTR_H
#define ZLTR_H

#include <stddef.h>
#include <stdint.h>

enum zltr_kind {
  ZLTR_BRANCH = 0,
  ZLTR_MEM_READ = 1,
  ZLTR_MEM_WRITE = 2,
  ZLTR_ALLOC = 3,
  ZLTR_FREE = 4,
  ZLTR_CALL = 5,
  ZLTR_RETURN = 6,
};

/* Starts recording. Stack addresses are taken relative to the caller's
 * frame, so call it from main before running the target. */
void zltr_begin(void);
/* Flushes the trace; also registered with atexit by zltr_begin. */
void zltr_end(void);

/* Registers a heap block; accesses inside it are recorded as
 * (allocation id, offset). Returns the id. */
uint32_t zltr_alloc(const void *ptr, size_t size);
void zltr_free(const void *ptr);

/* Raw event with an already normalized payload. */
void zltr_emit(uint8_t kind, uint64_t ip, uint64_t payload, uint64_t aux);
/* Normalizes an address: image-relative, stack-relative or allocation
 * tagged. */
uint64_t zltr_normalize(const void *addr);

#define TRACE_READ(addr) zltr_emit(ZLTR_MEM_READ, __LINE__, zltr_normalize((const void *)(addr)), 0)
#define TRACE_WRITE(addr) zltr_emit(ZLTR_MEM_WRITE, __LINE__, zltr_normalize((const void *)(addr)), 0)
#define TRACE_BRANCH(cond) zltr_emit(ZLTR_BRANCH, __LINE__, (cond) ? 1 : 0, 0)
#define TRACE_ALLOC(ptr, size) zltr_alloc((ptr), (size))

#endif
