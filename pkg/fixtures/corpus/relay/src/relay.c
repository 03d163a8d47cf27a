/* relay: formats one stdin command and reports through libmini.
 *
 * Same driving convention as the other fixtures: one line on stdin,
 * first byte selects the handler, exit code carries the result.
 */

int mini_send(const char *s, int len);
int mini_pack(int v);

static char journal[128];
static int journal_at = 0;
static char station[12] = "relay-nine";

static int sys3(int n, int a, int b, int c)
{
    int r;
    __asm__ volatile ("int $0x80"
                      : "=a"(r)
                      : "a"(n), "b"(a), "c"(b), "d"(c)
                      : "memory");
    return r;
}

static int field_len(const char *s, int cap)
{
    int n = 0;
    while (n < cap && s[n] && s[n] != '\n')
        n++;
    return n;
}

static int parse_width(const char *s, int len)
{
    int v = 0, i = 0;
    while (i < len && s[i] >= '0' && s[i] <= '9') {
        v = v * 10 + (s[i] - '0');
        i++;
    }
    return v;
}

/* Seeded bug: the declared entry width is trusted, so a wide entry
 * walks the journal cursor far past the journal itself. */
static int announce(const char *tag, int len)
{
    int width = parse_width(tag, len) * 16;
    char *at = journal + journal_at;
    for (int i = 0; i < width; i++)
        at[i] = '.';
    journal_at += width;
    mini_send("logged\n", 7);
    return width & 0x7f;
}

static int op_hello(const char *arg, int len)
{
    (void)arg;
    mini_send("hi\n", 3);
    return 40 + len;
}

static int op_name(const char *arg, int len)
{
    (void)arg; (void)len;
    mini_send(station, 10);
    mini_send("\n", 1);
    return 11;
}

static int op_pack(const char *arg, int len)
{
    int v = len > 0 ? arg[0] - '0' : 0;
    int got = mini_pack(v);
    mini_send("packed\n", 7);
    return got & 0x7f;
}

static int op_tag(const char *arg, int len)
{
    return announce(arg, len);
}

static int op_count(const char *arg, int len)
{
    (void)arg; (void)len;
    int marks = 0;
    for (int i = 0; i < 10; i++)
        if (station[i] == 'e' || station[i] == 'n')
            marks++;
    mini_send("count\n", 6);
    return marks;
}

static int op_sum(const char *arg, int len)
{
    int total = 0;
    for (int i = 0; i < len; i++)
        total += arg[i] & 0x0f;
    mini_send("sum\n", 4);
    return total & 0x7f;
}

static int op_flip(const char *arg, int len)
{
    char out[24];
    int n = len < 20 ? len : 20;
    for (int i = 0; i < n; i++)
        out[i] = arg[n - 1 - i];
    out[n] = '\n';
    mini_send(out, n + 1);
    return n;
}

static int op_width(const char *arg, int len)
{
    (void)arg;
    int w = len;
    while (w > 9)
        w -= 9;
    mini_send("w\n", 2);
    return 20 + w;
}

static int op_glyph(const char *arg, int len)
{
    int g = len > 0 ? (arg[0] & 0x1f) : 0;
    mini_send("glyph\n", 6);
    return 50 + g;
}

static int dispatch(const char *line, int len)
{
    const char *arg = line + 1;
    int alen = len > 1 ? field_len(arg, len - 1) : 0;
    switch (line[0]) {
    case 'h': return op_hello(arg, alen);
    case 'n': return op_name(arg, alen);
    case 'p': return op_pack(arg, alen);
    case 't': return op_tag(arg, alen);
    case 'c': return op_count(arg, alen);
    case 's': return op_sum(arg, alen);
    case 'f': return op_flip(arg, alen);
    case 'w': return op_width(arg, alen);
    case 'g': return op_glyph(arg, alen);
    }
    mini_send("bad\n", 4);
    return 64;
}

void _start(void)
{
    char line[96];
    int len = sys3(3, 0, (int)line, (int)sizeof(line));
    int code = len > 0 ? dispatch(line, len) : 65;
    sys3(1, code, 0, 0);
    __builtin_unreachable();
}
