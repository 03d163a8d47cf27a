/* vault: toy deposit ledger driven by one-line commands on stdin.
 *
 * Command grammar: <op-letter> [decimal]\n
 * Exit code carries the handler result; a short status line goes to
 * stdout.  Freestanding: raw int $0x80 syscalls, no libc.
 */

typedef unsigned int u32;

#define POOL_ENTRIES 256
#define ENTRY_BYTES  12

static int pool[POOL_ENTRIES * ENTRY_BYTES / 4];
static int balance = 100;
static int rate = 7;
static char scratch[64];

static int sys3(int n, int a, int b, int c)
{
    int r;
    __asm__ volatile ("int $0x80"
                      : "=a"(r)
                      : "a"(n), "b"(a), "c"(b), "d"(c)
                      : "memory");
    return r;
}

static int emit(const char *s)
{
    int len = 0;
    while (s[len])
        len++;
    return sys3(4, 1, (int)s, len);   /* write(1, s, len) */
}

static void emit_num(const char *tag, int v)
{
    char buf[32];
    int i = 0, j = 0;
    u32 u = (u32)v;
    while (tag[j]) {
        buf[i++] = tag[j++];
    }
    if (v < 0) {
        buf[i++] = '-';
        u = (u32)(-v);
    }
    j = i;
    do {
        buf[i++] = (char)('0' + u % 10);
        u /= 10;
    } while (u && i < 30);
    for (int k = 0; k < (i - j) / 2; k++) {
        char t = buf[j + k];
        buf[j + k] = buf[i - 1 - k];
        buf[i - 1 - k] = t;
    }
    buf[i++] = '\n';
    buf[i] = 0;
    emit(buf);
}

static int parse_count(const char *s, int len)
{
    int v = 0, i = 0;
    while (i < len && (s[i] == ' ' || s[i] == '\t'))
        i++;
    if (i == len || s[i] < '0' || s[i] > '9')
        return -1;
    while (i < len && s[i] >= '0' && s[i] <= '9') {
        v = v * 10 + (s[i] - '0');
        i++;
    }
    return v;
}

/* Seeded bug: the capacity check multiplies first and compares the
 * product, so a count around 2^32/12 wraps and slips past the guard. */
static int reserve_entries(int count)
{
    int bytes = count * ENTRY_BYTES;
    if (bytes > (int)sizeof(pool) || bytes < 0)
        return -1;
    for (int i = 0; i < count; i++) {
        pool[i * 3 + 0] = i;
        pool[i * 3 + 1] = rate;
        pool[i * 3 + 2] = balance;
    }
    return count & 0x3f;
}

static int op_balance(int n)
{
    int v = balance + n;
    emit_num("bal ", v);
    return v & 0x7f;
}

static int op_deposit(int n)
{
    if (n <= 0) {
        emit("dep none\n");
        return 9;
    }
    balance += n & 0xff;
    int got = reserve_entries(n);
    emit_num("dep ", got);
    return got < 0 ? 98 : (got & 0x3f);
}

static int op_withdraw(int n)
{
    if (n > balance)
        n = balance;
    balance -= n;
    emit_num("wdr ", balance);
    return balance & 0x7f;
}

static int op_rate(int n)
{
    rate = (rate * 3 + n) % 31;
    emit_num("rate ", rate);
    return rate;
}

static int op_audit(int n)
{
    int sum = 0;
    for (int i = 0; i < 16; i++)
        sum += pool[i] * (i + 1);
    emit_num("audit ", sum + n);
    return (sum + n) & 0x7f;
}

static int op_rotate(int n)
{
    for (int i = 0; i < 63; i++)
        scratch[i] = scratch[i + 1];
    scratch[63] = (char)n;
    emit("rot ok\n");
    return 17;
}

static int op_peek(int n)
{
    int idx = n & (POOL_ENTRIES - 1);
    emit_num("peek ", pool[idx * 3]);
    return pool[idx * 3] & 0x7f;
}

static int op_tally(int n)
{
    int odd = 0, even = 0;
    for (int i = 0; i < 32; i++) {
        if (pool[i] & 1)
            odd++;
        else
            even++;
    }
    emit_num("tally ", odd * 100 + even + n);
    return (odd + even) & 0x7f;
}

static int op_clear(int n)
{
    int wiped = 0;
    for (int i = 0; i < 24; i++) {
        if (pool[i]) {
            pool[i] = 0;
            wiped++;
        }
    }
    emit_num("clear ", wiped + n);
    return (wiped + n) & 0x7f;
}

static int dispatch(const char *line, int len)
{
    int n = len > 1 ? parse_count(line + 1, len - 1) : 0;
    switch (line[0]) {
    case 'b': return op_balance(n);
    case 'd': return op_deposit(n);
    case 'w': return op_withdraw(n);
    case 'r': return op_rate(n);
    case 'a': return op_audit(n);
    case 'o': return op_rotate(n);
    case 'p': return op_peek(n);
    case 't': return op_tally(n);
    case 'c': return op_clear(n);
    }
    emit("bad op\n");
    return 64;
}

void _start(void)
{
    char line[128];
    int len = sys3(3, 0, (int)line, (int)sizeof(line));   /* read(0, ...) */
    int code = len > 0 ? dispatch(line, len) : 65;
    sys3(1, code, 0, 0);                                  /* exit(code) */
    __builtin_unreachable();
}
