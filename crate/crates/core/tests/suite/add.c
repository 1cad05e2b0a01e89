u6 add(u6 a, u6 b) {
    return a + b;
}
