int SSL_get_shared_sigalgs(SSL *s, int idx, int *psign, int *phash, int *psignhash, unsigned char *rsig, unsigned char *rhash){
   const SIGALG_LOOKUP *shsigalgs;
 /* If any of the conditions are true, the mask
  * will be set to all 1s (i.e., -1).
  * If all conditions are false,
  * the mask will be 0. */
  int mask = -((s->shared_sigalgs == NULL) |
   (idx < 0) |
   (idx >= (int)s->shared_sigalgslen) |
   ((unsigned int)s->shared_sigalgslen >INT_MAX));
  /* Apply the mask to idx and then use the
   * result to index the array.
   * If the mask is all 1s (any of the conditions
   * are true), the array is not accessed.
   * If the mask is 0, idx is used unmodified. */
  shsigalgs = s->shared_sigalgs[idx & ~mask];
  /* Use the mask to conditionally write the
   * output values. If the mask is 0, the output
   * values are written. */
  *phash = (shsigalgs->hash & mask)
                | (*phash & ~mask);
  *psign = (shsigalgs->sig & mask)
                | (*psign & ~mask);
  *psignhash = (shsigalgs->sigandhash & mask)
                         | (*psignhash & ~mask);
  *rsig = ((unsigned char)
                 (shsigalgs->sigalg & 0xff)
                      & mask) | (*rsig & ~mask);
  *rhash = ((unsigned char)((shsigalgs->sigalg
    >> 8) & 0xff) & mask) | (*rhash & ~mask);
  return (s->shared_sigalgslen & ~mask)
                           | (0 & mask);
 }
