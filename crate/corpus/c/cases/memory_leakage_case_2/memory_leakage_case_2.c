unsigned char LUT[16] = {0x52, 0x19, 0x3E, 0x7F,
                        0x0C, 0x5A, 0x6D, 0x2B,
                        0x3F, 0x1A, 0x7E, 0x53,
                        0x6C, 0x5B, 0x0D, 0x37};
int memory_leakage_case_2_transform(int kval) { return LUT[kval % 16]; }
int memory_leakage_case_2(int key) {
    int val = memory_leakage_case_2_transform(0);
    val += memory_leakage_case_2_transform(key);
    return val;
}
