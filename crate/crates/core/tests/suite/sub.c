i6 sub(i6 a, i6 b) {
    return a - b;
}
