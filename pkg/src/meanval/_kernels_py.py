"""Pure-Python/numpy versions of the hot kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is unavailable or
``MEANVAL_PURE_PYTHON=1`` is set.
"""
import numpy as np

_FN1 = (np.sin, np.cos, np.exp, np.log, np.abs, np.arctan, np.sqrt)


def eval_program(code, consts, points, stack_size):
    """Run a compiled expression over every row of ``points``.

    Returns ``(values, error_code, error_row)``; error_code 0 means success.
    """
    n = points.shape[0]
    stack = []
    err = 0
    bad = np.zeros(n, dtype=bool)
    with np.errstate(all="ignore"):
        for pc in range(0, len(code), 2):
            op, arg = int(code[pc]), int(code[pc + 1])
            if op == 0:
                stack.append(np.full(n, consts[arg]))
            elif op == 1:
                stack.append(points[:, arg].copy())
            elif op == 2:
                stack[-1] = -stack[-1]
            elif 3 <= op <= 7 or 13 <= op <= 16:
                b = stack.pop()
                a = stack.pop()
                if op == 3:
                    r = a + b
                elif op == 4:
                    r = a - b
                elif op == 5:
                    r = a * b
                elif op == 6:
                    z = b == 0.0
                    if z.any() and not err:
                        err, bad = 1, z
                    r = a / b
                elif op == 7:
                    r = np.power(a, b)
                    z = np.isnan(r) & ~np.isnan(a) & ~np.isnan(b)
                    if z.any() and not err:
                        err, bad = 4, z
                elif op == 13:
                    r = (a < b).astype(np.float64)
                elif op == 14:
                    r = (a <= b).astype(np.float64)
                elif op == 15:
                    r = (a > b).astype(np.float64)
                else:
                    r = (a >= b).astype(np.float64)
                stack.append(r)
            elif op == 8:
                a = stack[-1]
                if arg == 3:
                    z = a <= 0.0
                    if z.any() and not err:
                        err, bad = 2, z
                elif arg == 6:
                    z = a < 0.0
                    if z.any() and not err:
                        err, bad = 3, z
                stack[-1] = _FN1[arg](a)
            elif 9 <= op <= 12:
                args = stack[len(stack) - arg:]
                del stack[len(stack) - arg:]
                r = args[0]
                if op == 9:
                    for a in args[1:]:
                        r = np.minimum(r, a)
                elif op == 10:
                    for a in args[1:]:
                        r = np.maximum(r, a)
                elif op == 11:
                    r = args[0] * args[0]
                    for a in args[1:]:
                        r = r + a * a
                    r = np.sqrt(r)
                else:
                    r = np.abs(args[0])
                    for a in args[1:]:
                        r = np.maximum(r, np.abs(a))
                stack.append(r)
            else:  # pragma: no cover
                raise ValueError(f"bad opcode {op}")
    where = int(np.argmax(bad)) if err else -1
    return stack[-1], err, where


def running_mean(seq):
    """Averages ``(u_0 + ... + u_n) / (n + 1)`` with compensated summation."""
    seq = np.asarray(seq, dtype=np.float64)
    out = np.empty_like(seq)
    s = 0.0
    c = 0.0
    for i, x in enumerate(seq.tolist()):
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i] = (s + c) / (i + 1)
    return out


def window_spread(a, window):
    """``max - min`` over each trailing window; NaN until the first full window."""
    a = np.asarray(a, dtype=np.float64)
    out = np.full(a.shape, np.nan)
    if window <= 0 or a.size < window:
        return out
    view = np.lib.stride_tricks.sliding_window_view(a, window)
    out[window - 1:] = view.max(axis=1) - view.min(axis=1)
    return out
