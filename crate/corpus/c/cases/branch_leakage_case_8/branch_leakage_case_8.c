char branch_leakage_case_8(unsigned char *a, unsigned char *b) {
    unsigned i;
    for (i = 0; i < 16; i++) {
        if (a[i] != b[i])
            return 0;
    }
    return 1;
}
