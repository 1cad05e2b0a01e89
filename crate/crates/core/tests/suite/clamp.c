u6 clamp(i6 a, u6 hi) {
    u6 r;
    if (a < 0) {
        r = 0;
    } else if (a > hi) {
        r = hi;
    } else {
        r = a;
    }
    return r;
}
