int branch_leakage_case_1(char *pw, char *in) {
    unsigned diff = 0;
    for (int i = 0; i < 16; i++)
        diff |= (unsigned char)(pw[i] ^ in[i]);
    return 1 & ((diff - 1) >> 8);
}
