unsigned int A[16] = {0, 1, 2, 3, 4, 5, 6, 7,
                      8, 9, 10, 11, 12, 13, 14, 15};
int memory_leakage_case_5(int secret) {
    if (secret < 16)
        return A[secret];
    return -1;
}
