def index_of(items, target, missing):
    position = 0
    while position < len(items):
        if items[position] == target:
            return position
        position = position + 1
    return missing
