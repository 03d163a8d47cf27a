/* Replacement for collect_marks: the cursor advances one slot per mark
 * and stops when the table is full. */

extern void *marks;
extern int (*normalize)();
extern int (*put_str)();
extern int (*put_num)();

int collect_marks(const char *arg, int len)
{
    int *out = (int *)marks;
    int wrote = 0;
    for (int i = 0; i < len; i++) {
        int v = normalize(arg[i]);
        if (v == 0)
            continue;
        if (wrote == 64)
            break;
        out[wrote] = v;
        wrote++;
    }
    put_str("marks ", 6);
    put_num(wrote);
    return wrote & 0x7f;
}
