/* Replacement for render_badge: clamps the copy to the text field so a
 * long name can no longer reach the finish slot. */

extern int (*finish_plain)();

int render_badge(const char *name, int len)
{
    struct {
        char text[16];
        int (*finish)(const char *, int);
    } b;
    b.finish = (int (*)(const char *, int))finish_plain;
    if (len > 15)
        len = 15;
    int i = 0;
    while (i < len) {
        b.text[i] = name[i];
        i++;
    }
    b.text[i] = 0;
    return b.finish(b.text, i);
}
