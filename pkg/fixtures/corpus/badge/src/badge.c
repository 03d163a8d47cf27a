/* badge: stamps visitor badges from a one-line command on stdin.
 *
 * Commands are a single opcode byte followed by an argument that runs
 * to the end of the line:  "bana" stamps a badge for "ana".
 */

typedef unsigned int uint;

int badge_count = 0;          /* keeps the image writable for profilers */
char motto[24] = "visitors welcome";

static int sys3(int n, int a, int b, int c)
{
    int r;
    __asm__ volatile("int $0x80"
                     : "=a"(r)
                     : "a"(n), "b"(a), "c"(b), "d"(c)
                     : "memory");
    return r;
}

static int emit(const char *s, int n)
{
    return sys3(4, 1, (int)s, n);
}

static void emit_num(int v)
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
    emit(buf + at + 1, 11 - at);
}

struct badge {
    char text[16];
    int (*finish)(const char *, int);
};

static int finish_plain(const char *text, int n)
{
    int sum = 0;
    for (int i = 0; i < n; i++)
        sum += text[i] * (i + 1);
    return sum & 0x7f;
}

/* Seeded bug: the badge text is copied with the caller's length, so a
 * long name runs past the field and overwrites the finish slot. */
static int render_badge(const char *name, int len)
{
    struct badge b;
    b.finish = finish_plain;
    int i = 0;
    while (i < len) {
        b.text[i] = name[i];
        i++;
    }
    if (i < 16)
        b.text[i] = 0;
    return b.finish(b.text, i);
}

static int op_badge(const char *arg, int len)
{
    badge_count++;
    emit("badge\n", 6);
    return render_badge(arg, len);
}

static int op_checksum(const char *arg, int len)
{
    emit("sum\n", 4);
    return finish_plain(arg, len);
}

static int op_greet(const char *arg, int len)
{
    emit("hello ", 6);
    emit(arg, len);
    emit("\n", 1);
    return 40 + len;
}

static int op_length(const char *arg, int len)
{
    emit("len ", 4);
    emit_num(len);
    return len;
}

static int op_upper(const char *arg, int len)
{
    int n = 0;
    for (int i = 0; i < len; i++)
        if (arg[i] >= 'A' && arg[i] <= 'Z')
            n++;
    emit("upper ", 6);
    emit_num(n);
    return n;
}

static int op_vowels(const char *arg, int len)
{
    int n = 0;
    for (int i = 0; i < len; i++) {
        char c = arg[i];
        if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u')
            n++;
    }
    emit("vowels ", 7);
    emit_num(n);
    return n;
}

static int op_motto(const char *arg, int len)
{
    (void)arg;
    (void)len;
    emit(motto, 16);
    emit("\n", 1);
    return 16;
}

static int op_code(const char *arg, int len)
{
    int v = len ? arg[0] : 0;
    emit("code ", 5);
    emit_num(v);
    return v & 0x7f;
}

static int op_initials(const char *arg, int len)
{
    char out[8];
    int n = 0;
    int boundary = 1;
    for (int i = 0; i < len && n < 8; i++) {
        if (arg[i] == ' ') {
            boundary = 1;
            continue;
        }
        if (boundary)
            out[n++] = arg[i];
        boundary = 0;
    }
    emit(out, n);
    emit("\n", 1);
    return n;
}

static int op_hash(const char *arg, int len)
{
    uint h = 17;
    for (int i = 0; i < len; i++)
        h = h * 31 + (uint)arg[i];
    emit("hash ", 5);
    emit_num((int)(h & 0xff));
    return (int)(h & 0x3f);
}

static int dispatch(const char *line, int len)
{
    const char *arg = line + 1;
    int alen = len - 1;
    while (alen > 0 && (arg[alen - 1] == '\n' || arg[alen - 1] == '\r'))
        alen--;
    switch (line[0]) {
    case 'b': return op_badge(arg, alen);
    case 'k': return op_checksum(arg, alen);
    case 'g': return op_greet(arg, alen);
    case 'l': return op_length(arg, alen);
    case 'u': return op_upper(arg, alen);
    case 'v': return op_vowels(arg, alen);
    case 'm': return op_motto(arg, alen);
    case 'c': return op_code(arg, alen);
    case 'i': return op_initials(arg, alen);
    case 'x': return op_hash(arg, alen);
    }
    emit("?\n", 2);
    return 86;
}

void _start(void)
{
    char line[128];
    int n = sys3(3, 0, (int)line, sizeof line);
    int code = 86;
    if (n > 0)
        code = dispatch(line, n);
    sys3(1, code & 0x7f, 0, 0);
    __builtin_unreachable();
}
