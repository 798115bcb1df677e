int memory_leakage_case_2_transform(int kval) { return LUT[kval % 16]; }
