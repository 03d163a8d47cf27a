extern void *pool;
extern void *rate;
extern void *balance;

int reserve_entries(int count)
{
    if (count < 0 || count > 256)
        return -1;
    int *cells = (int *)pool;
    int r = *(int *)rate;
    int b = *(int *)balance;
    for (int i = 0; i < count; i++) {
        cells[i * 3 + 0] = i;
        cells[i * 3 + 1] = r;
        cells[i * 3 + 2] = b;
    }
    return count & 0x3f;
}
