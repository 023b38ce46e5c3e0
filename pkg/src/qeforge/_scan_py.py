"""Pure-Python scanner kernel.

Byte-level tokenizer shared by the OpenQASM frontend and the IR text
reader. `qeforge._speedups` is a compiled twin of this module; both must
produce identical output for identical input (enforced by a differential
test), so any change here must be mirrored there.

The kernel returns raw tuples (kind, start, end, line, col) over the
UTF-8 bytes of the source. It never raises: unrecognized bytes and
malformed literals become ERROR tokens the callers turn into diagnostics.
"""

# Raw token kinds.
K_ERROR = 0
K_IDENT = 1
K_HWQUBIT = 2
K_INT = 3
K_FLOAT = 4
K_PUNCT = 5
K_STRING = 6
K_VALUE = 7     # %NN value reference (IR mode)
K_SYMBOL = 8    # @name symbol reference (IR mode)
K_DURATION = 9  # numeric literal with a time-unit suffix (QASM mode)

MODE_QASM = 0
MODE_IR = 1

_DURATION_UNITS = (b"dt", b"ns", b"us", b"ms", b"s")

_QASM_PUNCT = frozenset(b"()[]{};,=-")
_IR_PUNCT = frozenset(b"()[]{}<>;,=:-!#^")


def _is_alpha(c):
    return 65 <= c <= 90 or 97 <= c <= 122 or c == 95


def _is_digit(c):
    return 48 <= c <= 57


def _is_ident_cont(c, mode):
    if _is_alpha(c) or _is_digit(c):
        return True
    return mode == MODE_IR and c == 46  # '.' inside IR op/attr names


def scan(data: bytes, mode: int):
    """Tokenize `data`, returning a list of (kind, start, end, line, col)."""
    tokens = []
    n = len(data)
    i = 0
    line = 1
    col = 1
    while i < n:
        c = data[i]

        if c == 32 or c == 9 or c == 13:  # space, tab, CR
            i += 1
            col += 1
            continue
        if c == 10:  # newline
            i += 1
            line += 1
            col = 1
            continue

        if c == 47 and i + 1 < n and data[i + 1] == 47:  # '//' comment
            j = i + 2
            while j < n and data[j] != 10:
                j += 1
            col += j - i
            i = j
            continue

        start = i
        tline = line
        tcol = col

        if _is_alpha(c):
            j = i + 1
            while j < n and _is_ident_cont(data[j], mode):
                j += 1
            tokens.append((K_IDENT, i, j, tline, tcol))
            col += j - i
            i = j
            continue

        if _is_digit(c):
            j = i + 1
            while j < n and _is_digit(data[j]):
                j += 1
            is_float = False
            if j < n and data[j] == 46:  # '.'
                is_float = True
                j += 1
                while j < n and _is_digit(data[j]):
                    j += 1
            if j < n and (data[j] == 101 or data[j] == 69):  # e/E exponent
                k = j + 1
                if k < n and (data[k] == 43 or data[k] == 45):  # sign
                    k += 1
                if k < n and _is_digit(data[k]):
                    is_float = True
                    j = k + 1
                    while j < n and _is_digit(data[j]):
                        j += 1
                else:
                    # '1e', '1e+' with no digits: malformed literal
                    tokens.append((K_ERROR, i, k, tline, tcol))
                    col += k - i
                    i = k
                    continue
            if j < n and _is_alpha(data[j]):
                # Letters glued to a number: a duration literal in QASM
                # mode, malformed everywhere else.
                k = j
                while k < n and _is_alpha(data[k]):
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

        if c == 36 and mode == MODE_QASM:  # '$' hardware qubit
            j = i + 1
            while j < n and _is_digit(data[j]):
                j += 1
            kind = K_HWQUBIT if j > i + 1 else K_ERROR
            tokens.append((kind, i, j, tline, tcol))
            col += j - i
            i = j
            continue

        if c == 34:  # '"' string literal
            j = i + 1
            closed = False
            while j < n:
                d = data[j]
                if d == 92 and j + 1 < n:  # backslash escape
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
            if c == 37:  # '%' value reference
                j = i + 1
                while j < n and _is_digit(data[j]):
                    j += 1
                kind = K_VALUE if j > i + 1 else K_ERROR
                tokens.append((kind, i, j, tline, tcol))
                col += j - i
                i = j
                continue
            if c == 64:  # '@' symbol reference
                j = i + 1
                while j < n and (_is_alpha(data[j]) or _is_digit(data[j])):
                    j += 1
                kind = K_SYMBOL if j > i + 1 else K_ERROR
                tokens.append((kind, i, j, tline, tcol))
                col += j - i
                i = j
                continue
            if c == 45 and i + 1 < n and data[i + 1] == 62:  # '->'
                tokens.append((K_PUNCT, i, i + 2, tline, tcol))
                col += 2
                i += 2
                continue
            if c in _IR_PUNCT:
                tokens.append((K_PUNCT, i, i + 1, tline, tcol))
                col += 1
                i += 1
                continue
        else:
            if c in _QASM_PUNCT:
                tokens.append((K_PUNCT, i, i + 1, tline, tcol))
                col += 1
                i += 1
                continue

        tokens.append((K_ERROR, i, i + 1, tline, tcol))
        col += 1
        i += 1

    return tokens
