int mini_send(const char *s, int len);

extern void *journal;
extern void *journal_at;

int announce(const char *tag, int len)
{
    int v = 0, i = 0;
    while (i < len && tag[i] >= '0' && tag[i] <= '9') {
        v = v * 10 + (tag[i] - '0');
        i++;
    }
    int width = v * 16;
    int *cursor = (int *)journal_at;
    char *base = (char *)journal;
    if (width < 0 || *cursor + width > 128) {
        mini_send("full\n", 5);
        return 98;
    }
    char *at = base + *cursor;
    for (int k = 0; k < width; k++)
        at[k] = '.';
    *cursor += width;
    mini_send("logged\n", 7);
    return width & 0x7f;
}
