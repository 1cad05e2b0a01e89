u16 mac(u8 a, u8 b, u16 acc) {
    return acc + a * b;
}
