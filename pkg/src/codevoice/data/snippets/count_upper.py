def count_upper(word, upper_set):
    matches = 0
    for letter in word:
        if letter in upper_set:
            matches = matches + 1
    return matches
