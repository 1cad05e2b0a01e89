// Dynamic read and write through MUX trees; out-of-range reads give 0.
u3 pick(u3 xs[3], u2 i) {
    u3 ys[3] = xs;
    ys[i] = ys[i] + 1;
    return ys[i] ^ xs[i];
}
