#include <stdbool.h>

int branch_leakage_case_3(char *p, char *q) {
    if (p[0] != q[0])
        return false;
    else if (p[1] != q[1])
        return false;
    else
        return p[2] == q[2];
}
