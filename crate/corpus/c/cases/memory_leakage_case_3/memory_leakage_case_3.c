int memory_leakage_case_3(int secret) {
    int table[128] = {0};
    for (int i = 0; i < 128; i++) {
        table[i] = i;
    }
    int i, t;
    int index = 0;
    for (i = 0; i < 200; i++) {
        index = (index + secret) % 128;
        t = table[index];
        t = table[(index) % 128];
    }
    return t;
}
