int equal(char *p, char *q) {
    return (p[0] == q[0]) && (p[1] == q[1]) && (p[2] == q[2]);
}
