int total_sum(int values[], int count) {
    int total = 0;
    int index = 0;
    while (index < count) {
        total = total + values[index];
        index = index + 1;
    }
    return total;
}
