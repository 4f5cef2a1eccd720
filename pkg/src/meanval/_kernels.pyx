# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: expression VM, compensated running mean, window spread."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, log, fabs, atan, sqrt, pow, isnan, NAN

cnp.import_array()

DEF MAX_STACK = 256


def eval_program(const long long[::1] code, const double[::1] consts,
                 const double[:, ::1] points, int stack_size):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t ncode = code.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double stack[MAX_STACK]
    cdef Py_ssize_t i, pc, sp, k
    cdef long long op, arg
    cdef double a, b, r
    cdef int err = 0
    cdef Py_ssize_t where = -1
    if stack_size > MAX_STACK:
        raise ValueError("expression too deep for compiled kernel")
    with nogil:
        for i in range(n):
            sp = 0
            pc = 0
            while pc < ncode:
                op = code[pc]
                arg = code[pc + 1]
                pc += 2
                if op == 0:
                    stack[sp] = consts[arg]
                    sp += 1
                elif op == 1:
                    stack[sp] = points[i, arg]
                    sp += 1
                elif op == 2:
                    stack[sp - 1] = -stack[sp - 1]
                elif op == 8:
                    a = stack[sp - 1]
                    if arg == 0:
                        r = sin(a)
                    elif arg == 1:
                        r = cos(a)
                    elif arg == 2:
                        r = exp(a)
                    elif arg == 3:
                        if a <= 0.0 and err == 0:
                            err = 2
                            where = i
                        r = log(a)
                    elif arg == 4:
                        r = fabs(a)
                    elif arg == 5:
                        r = atan(a)
                    else:
                        if a < 0.0 and err == 0:
                            err = 3
                            where = i
                        r = sqrt(a)
                    stack[sp - 1] = r
                elif op >= 9 and op <= 12:
                    k = sp - arg
                    if op == 9:
                        r = stack[k]
                        for k in range(sp - arg + 1, sp):
                            if stack[k] < r:
                                r = stack[k]
                    elif op == 10:
                        r = stack[k]
                        for k in range(sp - arg + 1, sp):
                            if stack[k] > r:
                                r = stack[k]
                    elif op == 11:
                        r = stack[k] * stack[k]
                        for k in range(sp - arg + 1, sp):
                            r = r + stack[k] * stack[k]
                        r = sqrt(r)
                    else:
                        r = fabs(stack[k])
                        for k in range(sp - arg + 1, sp):
                            if fabs(stack[k]) > r:
                                r = fabs(stack[k])
                    sp -= arg
                    stack[sp] = r
                    sp += 1
                else:
                    b = stack[sp - 1]
                    a = stack[sp - 2]
                    sp -= 1
                    if op == 3:
                        r = a + b
                    elif op == 4:
                        r = a - b
                    elif op == 5:
                        r = a * b
                    elif op == 6:
                        if b == 0.0 and err == 0:
                            err = 1
                            where = i
                        r = a / b
                    elif op == 7:
                        r = pow(a, b)
                        if isnan(r) and not isnan(a) and not isnan(b) and err == 0:
                            err = 4
                            where = i
                    elif op == 13:
                        r = 1.0 if a < b else 0.0
                    elif op == 14:
                        r = 1.0 if a <= b else 0.0
                    elif op == 15:
                        r = 1.0 if a > b else 0.0
                    else:
                        r = 1.0 if a >= b else 0.0
                    stack[sp - 1] = r
            out[i] = stack[0]
    return out_arr, err, where


def running_mean(seq):
    cdef const double[::1] s_in = np.ascontiguousarray(seq, dtype=np.float64)
    cdef Py_ssize_t n = s_in.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double s = 0.0, c = 0.0, t, x
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            x = s_in[i]
            t = s + x
            if fabs(s) >= fabs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
            out[i] = (s + c) / (i + 1)
    return out_arr


def window_spread(a, int window):
    cdef const double[::1] v = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.full(n, np.nan)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double lo, hi
    if window <= 0:
        return out_arr
    with nogil:
        for i in range(window - 1, n):
            lo = v[i]
            hi = v[i]
            for j in range(i - window + 1, i):
                if v[j] < lo:
                    lo = v[j]
                if v[j] > hi:
                    hi = v[j]
            out[i] = hi - lo
    return out_arr
