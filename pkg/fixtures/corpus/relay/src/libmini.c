/* libmini: syscall-backed I/O helpers shared by the relay fixture. */

int mini_state = 1;

static int sys3(int n, int a, int b, int c)
{
    int r;
    __asm__ volatile ("int $0x80"
                      : "=a"(r)
                      : "a"(n), "b"(a), "c"(b), "d"(c)
                      : "memory");
    return r;
}

int mini_send(const char *s, int len)
{
    return sys3(4, 1, (int)s, len);
}

int mini_pack(int v)
{
    mini_state = mini_state * 5 + 1;
    return v * 3 + 7;
}
