/* Replacement for run_stages: stops at the table sentinel instead of
 * trusting the depth bound alone. */

extern void *stages;

int run_stages(int depth)
{
    int (**table)(int) = (int (**)(int))stages;
    if (depth < 0 || depth > 4)
        return 99;
    int total = 0;
    for (int i = 0; i <= depth && table[i]; i++)
        total += table[i](i);
    return total & 0x7f;
}
