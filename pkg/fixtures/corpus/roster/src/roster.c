/* roster: drill-day planner driven by a one-line command on stdin.
 *
 * "m<depth>" musters the squad through training stages 0..depth, other
 * opcodes poke at individual stages or report bookkeeping totals.
 */

int drill_day = 14;
char squad[16] = "fourth-platoon";

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

static void put_num(int v)
{
    char buf[12];
    int at = 11;
    buf[at--] = '\n';
    if (v < 0) {
        put_str("-", 1);
        v = -v;
    }
    do {
        buf[at--] = (char)('0' + v % 10);
        v /= 10;
    } while (v);
    put_str(buf + at + 1, 11 - at);
}

static int stage_brief(int k) { return k * 3 + 1; }
static int stage_drill(int k) { return k * 5 + 2; }
static int stage_march(int k) { return k * 7 + 4; }
static int stage_rally(int k) { return k * 2 + 9; }

static int (*const stages[5])(int) = {
    stage_brief, stage_drill, stage_march, stage_rally, 0,
};

/* Seeded bug: the loop bound is inclusive, so the deepest legal muster
 * walks one slot past the real stages and calls the table sentinel. */
static int run_stages(int depth)
{
    if (depth < 0 || depth > 4)
        return 99;
    int total = 0;
    for (int i = 0; i <= depth; i++)
        total += stages[i](i);
    return total & 0x7f;
}

static int digit_arg(const char *arg, int len)
{
    if (len < 1 || arg[0] < '0' || arg[0] > '9')
        return -1;
    return arg[0] - '0';
}

static int op_muster(const char *arg, int len)
{
    int depth = digit_arg(arg, len);
    put_str("muster ", 7);
    put_num(depth);
    return run_stages(depth);
}

static int op_brief(const char *arg, int len)
{
    int k = digit_arg(arg, len);
    if (k < 0)
        return 99;
    put_str("brief\n", 6);
    return stages[0](k) & 0x7f;
}

static int op_rally(const char *arg, int len)
{
    int k = digit_arg(arg, len);
    if (k < 0)
        return 99;
    put_str("rally\n", 6);
    return stages[3](k) & 0x7f;
}

static int op_epoch(const char *arg, int len)
{
    int k = digit_arg(arg, len);
    if (k < 0)
        return 99;
    put_str("march\n", 6);
    return stages[2](k) & 0x7f;
}

static int op_day(const char *arg, int len)
{
    (void)arg;
    (void)len;
    put_str("day ", 4);
    put_num(drill_day);
    return drill_day;
}

static int op_squad(const char *arg, int len)
{
    (void)arg;
    (void)len;
    put_str(squad, 14);
    put_str("\n", 1);
    return 14;
}

static int op_count(const char *arg, int len)
{
    (void)arg;
    put_str("count ", 6);
    put_num(len);
    return len & 0x7f;
}

static int op_twice(const char *arg, int len)
{
    int k = digit_arg(arg, len);
    if (k < 0)
        return 99;
    put_str("twice ", 6);
    put_num(k * 2);
    return (k * 2) & 0x7f;
}

static int op_shift(const char *arg, int len)
{
    int k = digit_arg(arg, len);
    if (k < 0)
        return 99;
    drill_day = (drill_day + k) % 28;
    put_str("shift ", 6);
    put_num(drill_day);
    return drill_day;
}

static int op_sum(const char *arg, int len)
{
    int total = 0;
    for (int i = 0; i < len; i++)
        if (arg[i] >= '0' && arg[i] <= '9')
            total += arg[i] - '0';
    put_str("sum ", 4);
    put_num(total);
    return total & 0x7f;
}

static int dispatch(const char *line, int len)
{
    const char *arg = line + 1;
    int alen = len - 1;
    while (alen > 0 && (arg[alen - 1] == '\n' || arg[alen - 1] == '\r'))
        alen--;
    switch (line[0]) {
    case 'm': return op_muster(arg, alen);
    case 'b': return op_brief(arg, alen);
    case 'y': return op_rally(arg, alen);
    case 'e': return op_epoch(arg, alen);
    case 'd': return op_day(arg, alen);
    case 'q': return op_squad(arg, alen);
    case 'c': return op_count(arg, alen);
    case 't': return op_twice(arg, alen);
    case 'f': return op_shift(arg, alen);
    case 's': return op_sum(arg, alen);
    }
    put_str("?\n", 2);
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
