int char_code(char symbol) {
    int byte_value = symbol;
    if (byte_value < 0) {
        byte_value = byte_value + 256;
    }
    return byte_value;
}
