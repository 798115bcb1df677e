int branch_leakage_case_5(int high, int low) {
    int i;
    if (low > 0) {
        i = 0;
        while (i < low) i++;
        while (i > 0) i--;
    } else {
        if (high == 0) { i = 5; }
        else { i = 0; i++; }
    }
    return i;
}
