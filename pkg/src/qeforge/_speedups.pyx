# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled scanner kernel: a line-for-line port of qeforge._scan_py.

Both kernels must produce identical output for identical input; the
differential test drives them with random byte strings. Keep the logic in
sync with _scan_py.py when changing either.
"""

K_ERROR = 0
K_IDENT = 1
K_HWQUBIT = 2
K_INT = 3
K_FLOAT = 4
K_PUNCT = 5
K_STRING = 6
K_VALUE = 7
K_SYMBOL = 8
K_DURATION = 9

MODE_QASM = 0
MODE_IR = 1

cdef frozenset _DURATION_UNITS = frozenset((b"dt", b"ns", b"us", b"ms", b"s"))

cdef inline bint _is_alpha(unsigned char c) nogil:
    return (65 <= c <= 90) or (97 <= c <= 122) or c == 95

cdef inline bint _is_digit(unsigned char c) nogil:
    return 48 <= c <= 57

cdef inline bint _is_ident_cont(unsigned char c, int mode) nogil:
    if _is_alpha(c) or _is_digit(c):
        return True
    return mode == 1 and c == 46

cdef inline bint _is_qasm_punct(unsigned char c) nogil:
    # ()[]{};,=-
    return c == 40 or c == 41 or c == 91 or c == 93 or c == 123 or \
        c == 125 or c == 59 or c == 44 or c == 61 or c == 45

cdef inline bint _is_ir_punct(unsigned char c) nogil:
    # ()[]{}<>;,=:-!#^
    return c == 40 or c == 41 or c == 91 or c == 93 or c == 123 or \
        c == 125 or c == 60 or c == 62 or c == 59 or c == 44 or \
        c == 61 or c == 58 or c == 45 or c == 33 or c == 35 or c == 94


def scan(bytes data, int mode):
    """Tokenize `data`, returning a list of (kind, start, end, line, col)."""
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t i = 0, j = 0, k = 0, start = 0
    cdef long line = 1, col = 1, tline = 0, tcol = 0
    cdef unsigned char c, d
    cdef bint is_float, closed
    cdef int kind
    tokens = []

    while i < n:
        c = p[i]

        if c == 32 or c == 9 or c == 13:
            i += 1
            col += 1
            continue
        if c == 10:
            i += 1
            line += 1
            col = 1
            continue

        if c == 47 and i + 1 < n and p[i + 1] == 47:
            j = i + 2
            while j < n and p[j] != 10:
                j += 1
            col += j - i
            i = j
            continue

        start = i
        tline = line
        tcol = col

        if _is_alpha(c):
            j = i + 1
            while j < n and _is_ident_cont(p[j], mode):
                j += 1
            tokens.append((K_IDENT, i, j, tline, tcol))
            col += j - i
            i = j
            continue

        if _is_digit(c):
            j = i + 1
            while j < n and _is_digit(p[j]):
                j += 1
            is_float = False
            if j < n and p[j] == 46:
                is_float = True
                j += 1
                while j < n and _is_digit(p[j]):
                    j += 1
            if j < n and (p[j] == 101 or p[j] == 69):
                k = j + 1
                if k < n and (p[k] == 43 or p[k] == 45):
                    k += 1
                if k < n and _is_digit(p[k]):
                    is_float = True
                    j = k + 1
                    while j < n and _is_digit(p[j]):
                        j += 1
                else:
                    tokens.append((K_ERROR, i, k, tline, tcol))
                    col += k - i
                    i = k
                    continue
            if j < n and _is_alpha(p[j]):
                k = j
                while k < n and _is_alpha(p[k]):
                    k += 1
                if mode == MODE_QASM and data[j:k] in _DURATION_UNITS:
                    tokens.append((K_DURATION, i, k, tline, tcol))
                else:
                    tokens.append((K_ERROR, i, k, tline, tcol))
                col += k - i
                i = k
                continue
            tokens.append((K_FLOAT if is_float else K_INT, i, j, tline, tcol))
            col += j - i
            i = j
            continue

        if c == 36 and mode == MODE_QASM:
            j = i + 1
            while j < n and _is_digit(p[j]):
                j += 1
            kind = K_HWQUBIT if j > i + 1 else K_ERROR
            tokens.append((kind, i, j, tline, tcol))
            col += j - i
            i = j
            continue

        if c == 34:
            j = i + 1
            closed = False
            while j < n:
                d = p[j]
                if d == 92 and j + 1 < n:
                    j += 2
                    continue
                if d == 34:
                    j += 1
                    closed = True
                    break
                if d == 10:
                    break
                j += 1
            tokens.append((K_STRING if closed else K_ERROR, i, j, tline, tcol))
            col += j - i
            i = j
            continue

        if mode == MODE_IR:
            if c == 37:
                j = i + 1
                while j < n and _is_digit(p[j]):
                    j += 1
                kind = K_VALUE if j > i + 1 else K_ERROR
                tokens.append((kind, i, j, tline, tcol))
                col += j - i
                i = j
                continue
            if c == 64:
                j = i + 1
                while j < n and (_is_alpha(p[j]) or _is_digit(p[j])):
                    j += 1
                kind = K_SYMBOL if j > i + 1 else K_ERROR
                tokens.append((kind, i, j, tline, tcol))
                col += j - i
                i = j
                continue
            if c == 45 and i + 1 < n and p[i + 1] == 62:
                tokens.append((K_PUNCT, i, i + 2, tline, tcol))
                col += 2
                i += 2
                continue
            if _is_ir_punct(c):
                tokens.append((K_PUNCT, i, i + 1, tline, tcol))
                col += 1
                i += 1
                continue
        else:
            if _is_qasm_punct(c):
                tokens.append((K_PUNCT, i, i + 1, tline, tcol))
                col += 1
                i += 1
                continue

        tokens.append((K_ERROR, i, i + 1, tline, tcol))
        col += 1
        i += 1

    return tokens
