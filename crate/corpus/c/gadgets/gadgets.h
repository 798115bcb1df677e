/* Spectre v1 gadget set: publicarray-style variants of Kocher's examples.
 * Cases 11gcc, 11ker and 11sub are reconstructions of the memcmp variants. */
#ifndef GADGETS_H
#define GADGETS_H

#include <stdint.h>

#define PUBLICARRAY_SIZE 16

extern uint32_t publicarray_size;
extern uint8_t publicarray[PUBLICARRAY_SIZE];
extern uint8_t publicarray2[512 * 256];
extern volatile uint8_t temp;

void case_1(uint32_t idx);
void case_2(uint32_t idx);
void case_3(uint32_t idx);
void case_4(uint32_t idx);
void case_5(uint32_t idx);
void case_6(uint32_t idx);
void case_7(uint32_t idx);
void case_8(uint32_t idx);
void case_9(uint32_t idx, uint32_t *x_is_safe);
void case_10(uint32_t idx, uint8_t k);
void case_11gcc(uint32_t idx);
void case_11ker(uint32_t idx);
void case_11sub(uint32_t idx);
void case_12(uint32_t idx, uint8_t y);
void case_13(uint32_t idx);
void case_14(uint32_t idx);

#endif
