def sum_list(numbers):
    total = 0
    for value in numbers:
        total = total + value
    return total
