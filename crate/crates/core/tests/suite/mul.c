u6 mul(u6 a, u6 b) {
    return a * b;
}
