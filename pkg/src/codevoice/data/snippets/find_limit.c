int find_limit(int buffer[], int size) {
    int limit = 0;
    int position = 0;
    while (position < size) {
        if (buffer[position] > limit) {
            limit = buffer[position];
        }
        position = position + 1;
    }
    return limit;
}
