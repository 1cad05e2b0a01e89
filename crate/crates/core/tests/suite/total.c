u6 total(u3 xs[4]) {
    u6 s = 0;
    for (int i = 0; i < 4; i++) {
        s += xs[i];
    }
    return s;
}
