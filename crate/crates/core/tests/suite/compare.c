// Bit 0: a < b, bit 1: a == b, bit 2: a >= 3, bit 3: a != b.
u4 compare(i6 a, u6 b) {
    u4 r = 0;
    r |= (u4)(a < b);
    r |= (u4)(a == b) << 1;
    r |= (u4)(a >= 3) << 2;
    r |= (u4)(a != b) << 3;
    return r;
}
