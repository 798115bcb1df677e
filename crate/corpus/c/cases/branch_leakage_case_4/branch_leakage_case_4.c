typedef unsigned int uint;

int branch_leakage_case_4(int high, uint low) {
    int i;
    if (high == 0) {
        i = 0;
        while (i < low) i++;
    }
    else {
        i = low;
        while (i > 0) i--;
    }
    return i;
}
