i4 first_match(i4 a, u4 b) {
    if (a < 0) return -a;
    for (int i = 0; i < 3; i++) {
        if (b == i) return i;
    }
    return a ^ b;
}
