struct QR {
    u6 q;
    u6 r;
};

QR divmod(u6 a, u6 b) {
    QR out;
    out.q = a / b;
    out.r = a % b;
    return out;
}
