int branch_leakage_case_6(int x) {
    if (x > 10) {
        return x % 10;
    } else {
        return x + 10;
    }
}
