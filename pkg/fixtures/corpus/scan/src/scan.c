/* scan: letter-mark tabulator fed one command line on stdin.
 *
 * "s<word>" records normalized letter marks, the other opcodes are
 * small text probes over the same argument.
 */

int scan_runs = 0;
int marks[64];

static int sys3(int n, int a, int b, int c)
{
    int r;
    __asm__ volatile("int $0x80"
                     : "=a"(r)
                     : "a"(n), "b"(a), "c"(b), "d"(c)
                     : "memory");
    return r;
}

static int put_str(const char *s, int n)
{
    return sys3(4, 1, (int)s, n);
}

static int put_num(int v)
{
    char buf[12];
    int at = 11;
    int neg = v < 0;
    if (neg)
        v = -v;
    buf[at--] = '\n';
    do {
        buf[at--] = (char)('0' + v % 10);
        v /= 10;
    } while (v);
    if (neg)
        buf[at--] = '-';
    return put_str(buf + at + 1, 11 - at);
}

/* letters map to 1..26, everything else to 0 */
static int normalize(int c)
{
    if (c >= 'a' && c <= 'z')
        return c - 'a' + 1;
    if (c >= 'A' && c <= 'Z')
        return c - 'A' + 1;
    return 0;
}

/* Seeded bug: the output cursor advances by the mark value instead of
 * one slot, so a run of high letters strides far past the table. */
static int collect_marks(const char *arg, int len)
{
    int *out = marks;
    int wrote = 0;
    for (int i = 0; i < len; i++) {
        int v = normalize(arg[i]);
        if (v == 0)
            continue;
        *out = v;
        out += v;
        wrote++;
    }
    put_str("marks ", 6);
    put_num(wrote);
    return wrote & 0x7f;
}

static int op_scan(const char *arg, int len)
{
    scan_runs++;
    return collect_marks(arg, len);
}

static int op_value(const char *arg, int len)
{
    int v = len ? normalize(arg[0]) : 0;
    put_str("value ", 6);
    put_num(v);
    return v;
}

static int op_letters(const char *arg, int len)
{
    int n = 0;
    for (int i = 0; i < len; i++)
        if (normalize(arg[i]))
            n++;
    put_str("letters ", 8);
    put_num(n);
    return n & 0x7f;
}

static int op_digits(const char *arg, int len)
{
    int total = 0;
    for (int i = 0; i < len; i++)
        if (arg[i] >= '0' && arg[i] <= '9')
            total += arg[i] - '0';
    put_str("digits ", 7);
    put_num(total);
    return total & 0x7f;
}

static int op_echo(const char *arg, int len)
{
    put_str(arg, len);
    put_str("\n", 1);
    return len & 0x7f;
}

static int op_width(const char *arg, int len)
{
    (void)arg;
    put_str("width ", 6);
    put_num(len);
    return len & 0x7f;
}

static int op_first(const char *arg, int len)
{
    if (len < 1) {
        put_str("none\n", 5);
        return 1;
    }
    put_str(arg, 1);
    put_str("\n", 1);
    return arg[0] & 0x7f;
}

static int op_spaces(const char *arg, int len)
{
    int n = 0;
    for (int i = 0; i < len; i++)
        if (arg[i] == ' ')
            n++;
    put_str("spaces ", 7);
    put_num(n);
    return n & 0x7f;
}

static int op_fold(const char *arg, int len)
{
    int acc = 9;
    for (int i = 0; i < len; i++)
        acc = (acc * 3 + arg[i]) & 0xff;
    put_str("fold ", 5);
    put_num(acc);
    return acc & 0x7f;
}

static int op_runs(const char *arg, int len)
{
    (void)arg;
    (void)len;
    put_str("runs ", 5);
    put_num(scan_runs);
    return scan_runs & 0x7f;
}

static int dispatch(const char *line, int len)
{
    const char *arg = line + 1;
    int alen = len - 1;
    while (alen > 0 && (arg[alen - 1] == '\n' || arg[alen - 1] == '\r'))
        alen--;
    switch (line[0]) {
    case 's': return op_scan(arg, alen);
    case 'v': return op_value(arg, alen);
    case 'l': return op_letters(arg, alen);
    case 'd': return op_digits(arg, alen);
    case 'e': return op_echo(arg, alen);
    case 'w': return op_width(arg, alen);
    case 'f': return op_first(arg, alen);
    case 'p': return op_spaces(arg, alen);
    case 'o': return op_fold(arg, alen);
    case 'r': return op_runs(arg, alen);
    }
    put_str("?\n", 2);
    return 86;
}

void _start(void)
{
    char line[256];
    int n = sys3(3, 0, (int)line, sizeof line);
    int code = 86;
    if (n > 0)
        code = dispatch(line, n);
    sys3(1, code & 0x7f, 0, 0);
    __builtin_unreachable();
}
