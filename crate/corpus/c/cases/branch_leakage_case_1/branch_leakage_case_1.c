int branch_leakage_case_1(char *pw, char *in) {
    int i;
    for (i = 0; i < 16; i++) {
        if (pw[i] != in[i]) {
            return 0;
        }
    }
    return 1;
}
