"""Task-file and expression grammar.

A task file declares one base field, optionally one extension, named
objects, and a list of tasks:

    # K = Q(t), one derivation with d1 t = 1
    field {
      generators t
      derivations 1
      d1 t = 1
    }

    extension {            # monogenic shorthand; or explicit rank/unit/mult/der
      minpoly z^2 - t
    }

    let f = poly (d1 x1)^2 - t
    let L = set { (d1 x1)^2 - t }
    let V = system { d1 x1 }
    let Kr = kernel {
      vars 1
      length 1
      a1[0] minpoly z^2 - t
      a1[1] minpoly 2*a1[0]*z - 1
    }

    task standardize V
    task divide f L as cert1
    task bounds 1 2 3

Expressions: integers, generator names, `x<i>` differential indeterminates
with derivative prefixes `d<k>`, `d<k>^<e>` or the multi-index sugar
`d[2,1]`, basis elements `b<j>` (inside system polynomials), polified
variables `x<i>[xi,..]`, kernel coordinates `a<i>[xi,..]` and `z`, and the
operators + - * / ^ ( ).  Division requires a constant divisor.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .diffpoly import AlgPoly, DerIndet, DiffPoly, KRing, RankedSet, mono_sort
from .errors import ParseError
from .field import BaseFieldSpec, RatFunc
from .kernels import KernelPresentation
from .weil import BRing, DiffPresentation, FreeExtension, monogenic_extension

TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<comment>\#[^\n]*)
      | (?P<newline>\n)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<punct>->|[{}\[\](),;=+\-*/^])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(source: str):
    tokens = []
    line = 1
    col = 1
    pos = 0
    while pos < len(source):
        m = TOKEN_RE.match(source, pos)
        if not m:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            tokens.append(Token("newline", text, line, col))
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, text, line, col))
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


D_RE = re.compile(r"^d(\d+)$")
X_RE = re.compile(r"^x(\d+)$")
B_RE = re.compile(r"^b(\d+)$")
A_RE = re.compile(r"^a(\d+)$")


class _Stream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead=0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.next()

    def expect(self, kind, text=None, expected=None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = expected or {text or kind}
            raise ParseError(
                f"unexpected {tok.text!r}" if tok.text else "unexpected end of input",
                tok.line,
                tok.col,
                expected=want,
            )
        return self.next()

    def error(self, message, expected=None):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col, expected=expected)


class ExprContext:
    """Resolves identifier atoms for one expression sort."""

    def __init__(self, kind, base: BaseFieldSpec, n=1, bring=None, kernel_n=None, z_var=None):
        self.kind = kind  # ratfunc | diffpoly | bpoly | algpoly | minpoly_z | kernel
        self.base = base
        self.n = n
        self.bring = bring
        self.kernel_n = kernel_n
        self.z_var = z_var
        self.kring = KRing(base)

    @property
    def m(self):
        return self.base.m

    def const(self, c):
        if self.kind == "ratfunc":
            return self.base.const(c)
        if self.kind in ("algpoly", "minpoly_z", "kernel"):
            n = self.kernel_n or self.n
            return AlgPoly.const(self.kring, n, self.m, c)
        ring = self.bring if self.kind == "bpoly" else self.kring
        return DiffPoly.const(ring, self.n, self.m, c)

    def from_ratfunc(self, f: RatFunc):
        if self.kind == "ratfunc":
            return f
        if self.kind in ("algpoly", "minpoly_z", "kernel"):
            n = self.kernel_n or self.n
            return AlgPoly.const(self.kring, n, self.m, f)
        ring = self.bring if self.kind == "bpoly" else self.kring
        return DiffPoly.const(ring, self.n, self.m, f)


def parse_expression(stream: _Stream, ctx: ExprContext):
    value = _parse_sum(stream, ctx)
    return value


def _parse_sum(stream, ctx):
    value = _parse_product(stream, ctx)
    while True:
        tok = stream.peek()
        if tok.kind == "punct" and tok.text in "+-":
            stream.next()
            rhs = _parse_product(stream, ctx)
            value = value + rhs if tok.text == "+" else value - rhs
        else:
            return value


def _parse_product(stream, ctx):
    value = _parse_unary(stream, ctx)
    while True:
        tok = stream.peek()
        if tok.kind == "punct" and tok.text in "*/":
            stream.next()
            rhs = _parse_unary(stream, ctx)
            if tok.text == "*":
                value = value * rhs
            else:
                value = _divide_values(value, rhs, ctx, tok)
        else:
            return value


def _divide_values(lhs, rhs, ctx, tok):
    if ctx.kind == "ratfunc":
        if rhs.is_zero():
            raise ParseError("division by zero", tok.line, tok.col)
        return lhs / rhs
    if not rhs.is_constant():
        raise ParseError("division requires a constant divisor", tok.line, tok.col)
    c = rhs.constant_coeff()
    if ctx.kind == "bpoly":
        # constant over B must be a scalar multiple of 1 to invert in K
        ext = ctx.bring.ext
        scal = None
        for i, u in enumerate(ext.unit):
            if not u.is_zero():
                scal = c[i] / u
                break
        for i in range(ext.ell):
            if c[i] != scal * ext.unit[i]:
                raise ParseError("division by a non-scalar extension element", tok.line, tok.col)
        if scal.is_zero():
            raise ParseError("division by zero", tok.line, tok.col)
        return lhs.scale(ctx.bring.ext.scalar_vec(scal.inv()))
    if c.is_zero():
        raise ParseError("division by zero", tok.line, tok.col)
    return lhs.scale(c.inv())


def _parse_unary(stream, ctx):
    tok = stream.peek()
    if tok.kind == "punct" and tok.text == "-":
        stream.next()
        return -_parse_unary(stream, ctx)
    if tok.kind == "punct" and tok.text == "+":
        stream.next()
        return _parse_unary(stream, ctx)
    return _parse_power(stream, ctx)


def _parse_power(stream, ctx):
    value = _parse_atom(stream, ctx)
    tok = stream.peek()
    if tok.kind == "punct" and tok.text == "^":
        stream.next()
        e = int(stream.expect("int", expected={"integer exponent"}).text)
        return value ** e
    return value


def _parse_multiindex(stream, ctx):
    """[e1, e2, ...] with exactly m entries."""
    open_tok = stream.expect("punct", "[")
    entries = []
    while True:
        entries.append(int(stream.expect("int", expected={"integer"}).text))
        tok = stream.peek()
        if tok.kind == "punct" and tok.text == ",":
            stream.next()
            continue
        break
    stream.expect("punct", "]")
    if len(entries) != ctx.m:
        raise ParseError(
            f"multi-index needs {ctx.m} entries, got {len(entries)}", open_tok.line, open_tok.col
        )
    return tuple(entries)


def _parse_atom(stream, ctx):
    tok = stream.peek()
    if tok.kind == "int":
        stream.next()
        return ctx.const(Fraction(int(tok.text)))
    if tok.kind == "punct" and tok.text == "(":
        stream.next()
        value = _parse_sum(stream, ctx)
        stream.expect("punct", ")")
        return value
    if tok.kind == "ident":
        return _parse_ident_atom(stream, ctx)
    stream.error(
        "expected a term",
        expected={"integer", "identifier", "("},
    )


def _parse_ident_atom(stream, ctx):
    tok = stream.peek()
    name = tok.text
    # generator of the base field
    if name in ctx.base.gen_names:
        stream.next()
        return ctx.from_ratfunc(ctx.base.gen(ctx.base.gen_names.index(name) + 1))
    dm = D_RE.match(name)
    if name == "d" and stream.peek(1).kind == "punct" and stream.peek(1).text == "[":
        stream.next()
        xi = _parse_multiindex(stream, ctx)
        return _parse_derivative_tail(stream, ctx, list(xi), tok)
    if dm:
        if ctx.kind not in ("diffpoly", "bpoly"):
            raise ParseError("derivatives are not allowed here", tok.line, tok.col)
        xi = [0] * ctx.m
        return _parse_derivative_tail(stream, ctx, xi, tok, first=tok)
    xm = X_RE.match(name)
    if xm:
        stream.next()
        i = int(xm.group(1))
        return _var_atom(stream, ctx, i, tok)
    bm = B_RE.match(name)
    if bm and ctx.kind == "bpoly":
        stream.next()
        j = int(bm.group(1))
        ext = ctx.bring.ext
        if not 1 <= j <= ext.ell:
            raise ParseError(f"basis index {j} out of range 1..{ext.ell}", tok.line, tok.col)
        vec = tuple(ctx.base.one() if q == j - 1 else ctx.base.zero() for q in range(ext.ell))
        return DiffPoly.const(ctx.bring, ctx.n, ctx.m, vec)
    am = A_RE.match(name)
    if am and ctx.kind in ("kernel", "minpoly_z"):
        stream.next()
        i = int(am.group(1))
        xi = _parse_multiindex(stream, ctx)
        n = ctx.kernel_n or ctx.n
        if not 1 <= i <= n:
            raise ParseError(f"coordinate index {i} out of range 1..{n}", tok.line, tok.col)
        return AlgPoly.indet(ctx.kring, n, ctx.m, xi, i)
    if name == "z" and ctx.kind in ("kernel", "minpoly_z"):
        stream.next()
        if ctx.z_var is None:
            raise ParseError("no coordinate is being defined here", tok.line, tok.col)
        n = ctx.kernel_n or ctx.n
        return AlgPoly.indet(ctx.kring, n, ctx.m, ctx.z_var.xi, ctx.z_var.i)
    raise ParseError(
        f"unknown name {name!r}",
        tok.line,
        tok.col,
        expected={"generator", "x<i>", "d<k>", "integer"},
    )


def _parse_derivative_tail(stream, ctx, xi, start, first=None):
    """After an initial d-token (or d[..]), finish: more d's, then x<i>."""
    if ctx.kind not in ("diffpoly", "bpoly"):
        raise ParseError("derivatives are not allowed here", start.line, start.col)
    if first is not None:
        tok = stream.next()  # consume the first d<k>
        k = int(D_RE.match(tok.text).group(1))
        e = 1
        if stream.peek().kind == "punct" and stream.peek().text == "^":
            stream.next()
            e = int(stream.expect("int", expected={"integer exponent"}).text)
        if not 1 <= k <= ctx.m:
            raise ParseError(f"derivation index {k} out of range 1..{ctx.m}", tok.line, tok.col)
        xi[k - 1] += e
    while True:
        tok = stream.peek()
        if tok.kind == "ident":
            dm = D_RE.match(tok.text)
            if dm:
                stream.next()
                k = int(dm.group(1))
                if not 1 <= k <= ctx.m:
                    raise ParseError(f"derivation index {k} out of range 1..{ctx.m}", tok.line, tok.col)
                e = 1
                if stream.peek().kind == "punct" and stream.peek().text == "^":
                    stream.next()
                    e = int(stream.expect("int", expected={"integer exponent"}).text)
                xi[k - 1] += e
                continue
            if tok.text == "d" and stream.peek(1).kind == "punct" and stream.peek(1).text == "[":
                stream.next()
                more = _parse_multiindex(stream, ctx)
                xi = [a + b for a, b in zip(xi, more)]
                continue
            xm = X_RE.match(tok.text)
            if xm:
                stream.next()
                i = int(xm.group(1))
                if not 1 <= i <= ctx.n:
                    raise ParseError(f"variable index {i} out of range 1..{ctx.n}", tok.line, tok.col)
                ring = ctx.bring if ctx.kind == "bpoly" else ctx.kring
                return DiffPoly.indet(ring, ctx.n, ctx.m, tuple(xi), i)
        stream.error("a derivative prefix must be followed by a variable", expected={"x<i>"})


def _var_atom(stream, ctx, i, tok):
    nxt = stream.peek()
    if nxt.kind == "punct" and nxt.text == "[":
        if ctx.kind not in ("algpoly", "kernel", "minpoly_z"):
            raise ParseError("bracketed variables are not allowed here", nxt.line, nxt.col)
        xi = _parse_multiindex(stream, ctx)
        n = ctx.kernel_n or ctx.n
        if not 1 <= i <= n:
            raise ParseError(f"variable index {i} out of range 1..{n}", tok.line, tok.col)
        return AlgPoly.indet(ctx.kring, n, ctx.m, xi, i)
    if ctx.kind == "algpoly":
        if not 1 <= i <= ctx.n:
            raise ParseError(f"variable index {i} out of range 1..{ctx.n}", tok.line, tok.col)
        return AlgPoly.indet(ctx.kring, ctx.n, ctx.m, (0,) * ctx.m, i)
    if ctx.kind in ("diffpoly", "bpoly"):
        if not 1 <= i <= ctx.n:
            raise ParseError(f"variable index {i} out of range 1..{ctx.n}", tok.line, tok.col)
        ring = ctx.bring if ctx.kind == "bpoly" else ctx.kring
        return DiffPoly.indet(ring, ctx.n, ctx.m, (0,) * ctx.m, i)
    raise ParseError("variables are not allowed in this context", tok.line, tok.col)


def parse_poly_text(text: str, ctx: ExprContext):
    """Parse a standalone expression (used by tests and round-trips)."""
    stream = _Stream(tokenize(text))
    stream.skip_newlines()
    value = parse_expression(stream, ctx)
    stream.skip_newlines()
    if stream.peek().kind != "eof":
        stream.error("trailing input after expression", expected={"end of input"})
    return value


# ------------------------------------------------------------------ files


class Task:
    def __init__(self, op, args, label, line):
        self.op = op
        self.args = args
        self.label = label
        self.line = line

    def __repr__(self):
        return f"Task({self.op}, {self.args!r})"


class TaskFile:
    def __init__(self):
        self.base: BaseFieldSpec | None = None
        self.ext: FreeExtension | None = None
        self.decls = {}
        self.decl_kinds = {}
        self.tasks = []


def parse_taskfile(source: str) -> TaskFile:
    stream = _Stream(tokenize(source))
    tf = TaskFile()
    while True:
        stream.skip_newlines()
        tok = stream.peek()
        if tok.kind == "eof":
            break
        if tok.kind != "ident":
            stream.error("expected a top-level declaration", expected={"field", "extension", "let", "task"})
        if tok.text == "field":
            if tf.base is not None:
                raise ParseError("duplicate field block", tok.line, tok.col)
            stream.next()
            tf.base = _parse_field_block(stream)
        elif tok.text == "extension":
            if tf.base is None:
                raise ParseError("extension block before field block", tok.line, tok.col)
            if tf.ext is not None:
                raise ParseError("duplicate extension block", tok.line, tok.col)
            stream.next()
            tf.ext = _parse_extension_block(stream, tf.base)
        elif tok.text == "let":
            if tf.base is None:
                raise ParseError("declaration before field block", tok.line, tok.col)
            stream.next()
            _parse_let(stream, tf)
        elif tok.text == "task":
            if tf.base is None:
                raise ParseError("task before field block", tok.line, tok.col)
            stream.next()
            _parse_task(stream, tf)
        else:
            stream.error(
                f"unknown top-level keyword {tok.text!r}",
                expected={"field", "extension", "let", "task"},
            )
    if tf.base is None:
        raise ParseError("task file needs a field block", 1, 1)
    return tf


def _parse_field_block(stream) -> BaseFieldSpec:
    stream.expect("punct", "{")
    gen_names = None
    m = None
    actions = {}
    while True:
        stream.skip_newlines()
        tok = stream.peek()
        if tok.kind == "punct" and tok.text == "}":
            stream.next()
            break
        key = stream.expect("ident", expected={"generators", "derivations", "d<k> <gen> = <expr>"})
        if key.text == "generators":
            names = []
            while stream.peek().kind == "ident":
                names.append(stream.next().text)
                if stream.peek().kind == "punct" and stream.peek().text == ",":
                    stream.next()
            if not names:
                # k = 0 allowed: constants-only base
                pass
            if len(set(names)) != len(names):
                raise ParseError("duplicate generator names", key.line, key.col)
            for nm in names:
                if X_RE.match(nm) or D_RE.match(nm) or B_RE.match(nm) or A_RE.match(nm) or nm == "z":
                    raise ParseError(f"generator name {nm!r} collides with reserved forms", key.line, key.col)
            gen_names = names
        elif key.text == "derivations":
            m = int(stream.expect("int", expected={"integer"}).text)
        else:
            dm = D_RE.match(key.text)
            if not dm:
                raise ParseError(f"unknown field-block entry {key.text!r}", key.line, key.col,
                                 expected={"generators", "derivations", "d<k>"})
            if gen_names is None or m is None:
                raise ParseError("declare generators and derivations before actions", key.line, key.col)
            d = int(dm.group(1))
            gen = stream.expect("ident", expected=set(gen_names))
            if gen.text not in gen_names:
                raise ParseError(f"unknown generator {gen.text!r}", gen.line, gen.col, expected=set(gen_names))
            stream.expect("punct", "=")
            tmp_base = BaseFieldSpec(len(gen_names), 0, [], gen_names=gen_names or None)
            ctx = ExprContext("ratfunc", tmp_base)
            val = parse_expression(stream, ctx)
            actions[(d, gen_names.index(gen.text) + 1)] = val
        _expect_line_end(stream)
    if gen_names is None or m is None:
        stream.error("field block needs generators and derivations entries")
    k = len(gen_names)
    table = [[RatFunc.const(k, 0) for _ in range(k)] for _ in range(m)]
    for (d, j), val in actions.items():
        if not 1 <= d <= m:
            raise ParseError(f"derivation index {d} out of range 1..{m}", 1, 1)
        table[d - 1][j - 1] = val
    return BaseFieldSpec(k, m, table, gen_names=gen_names or None)


def _expect_line_end(stream):
    tok = stream.peek()
    if tok.kind in ("newline", "eof"):
        return
    if tok.kind == "punct" and tok.text == "}":
        return
    stream.error("expected end of line", expected={"newline"})


def _parse_vector(stream, base: BaseFieldSpec, ell=None):
    stream.expect("punct", "[")
    ctx = ExprContext("ratfunc", base)
    entries = []
    while True:
        entries.append(parse_expression(stream, ctx))
        tok = stream.peek()
        if tok.kind == "punct" and tok.text == ",":
            stream.next()
            continue
        break
    stream.expect("punct", "]")
    if ell is not None and len(entries) != ell:
        raise ParseError(f"vector needs {ell} entries, got {len(entries)}", tok.line, tok.col)
    return tuple(entries)


def _parse_extension_block(stream, base: BaseFieldSpec) -> FreeExtension:
    stream.expect("punct", "{")
    rank = None
    unit = None
    mult_entries = {}
    der_entries = {}
    minpoly = None
    while True:
        stream.skip_newlines()
        tok = stream.peek()
        if tok.kind == "punct" and tok.text == "}":
            stream.next()
            break
        key = stream.expect("ident", expected={"rank", "unit", "mult", "der", "minpoly"})
        if key.text == "minpoly":
            ctx = ExprContext("minpoly_z", base, kernel_n=1, z_var=DerIndet((0,) * base.m, 1))
            val = parse_expression(stream, ctx)
            minpoly = _algpoly_to_coeff_list(val, ctx, key)
        elif key.text == "rank":
            rank = int(stream.expect("int", expected={"integer"}).text)
        elif key.text == "unit":
            unit = _parse_vector(stream, base, rank)
        elif key.text == "mult":
            i = int(stream.expect("int", expected={"integer"}).text)
            j = int(stream.expect("int", expected={"integer"}).text)
            mult_entries[(i, j)] = _parse_vector(stream, base, rank)
        elif key.text == "der":
            d = int(stream.expect("int", expected={"integer"}).text)
            j = int(stream.expect("int", expected={"integer"}).text)
            der_entries[(d, j)] = _parse_vector(stream, base, rank)
        else:
            raise ParseError(f"unknown extension entry {key.text!r}", key.line, key.col)
        _expect_line_end(stream)
    if minpoly is not None:
        if rank is not None or unit is not None or mult_entries or der_entries:
            raise ParseError("minpoly shorthand cannot be mixed with explicit tensors", 1, 1)
        return monogenic_extension(base, minpoly)
    if rank is None:
        raise ParseError("extension block needs a rank (or a minpoly)", 1, 1)
    ell = rank
    zero = base.zero()
    if unit is None:
        unit = tuple(base.one() if q == 0 else zero for q in range(ell))
    mult = [[[zero for _ in range(ell)] for _ in range(ell)] for _ in range(ell)]
    seen = set()
    for (i, j), vec in mult_entries.items():
        if not (1 <= i <= ell and 1 <= j <= ell):
            raise ParseError(f"mult indices ({i},{j}) out of range", 1, 1)
        for k in range(ell):
            mult[i - 1][j - 1][k] = vec[k]
            mult[j - 1][i - 1][k] = vec[k]
        seen.add((min(i, j), max(i, j)))
    missing = [(i, j) for i in range(1, ell + 1) for j in range(i, ell + 1) if (i, j) not in seen]
    if missing:
        raise ParseError(f"mult entries missing for basis pairs {missing}", 1, 1)
    der = [[[zero for _ in range(ell)] for _ in range(ell)] for _ in range(base.m)]
    for (d, j), vec in der_entries.items():
        if not (1 <= d <= base.m and 1 <= j <= ell):
            raise ParseError(f"der indices ({d},{j}) out of range", 1, 1)
        for i in range(ell):
            der[d - 1][i][j - 1] = vec[i]
    return FreeExtension(base, ell, mult, unit, der)


def _algpoly_to_coeff_list(val: AlgPoly, ctx: ExprContext, key) -> list:
    z = DerIndet((0,) * ctx.m, 1)
    deg = val.degree_in(z)
    if deg < 1:
        raise ParseError("minimal polynomial must mention z", key.line, key.col)
    coeffs = []
    for q in range(deg + 1):
        c = val.coeff_of_power(z, q)
        if not c.is_constant():
            raise ParseError("minimal polynomial coefficients must be base-field elements", key.line, key.col)
        coeffs.append(c.constant_coeff())
    if not coeffs[-1] == ctx.base.one():
        raise ParseError("minimal polynomial must be monic", key.line, key.col)
    return coeffs


def _count_x_vars(stream_tokens, start, end):
    best = 0
    for tok in stream_tokens[start:end]:
        if tok.kind == "ident":
            xm = X_RE.match(tok.text)
            if xm:
                best = max(best, int(xm.group(1)))
    return best


def _scan_braced(stream):
    """Token span of a brace-balanced region starting at '{' (exclusive)."""
    open_tok = stream.expect("punct", "{")
    depth = 1
    start = stream.pos
    while depth:
        tok = stream.next()
        if tok.kind == "eof":
            raise ParseError("unterminated '{'", open_tok.line, open_tok.col)
        if tok.kind == "punct" and tok.text == "{":
            depth += 1
        elif tok.kind == "punct" and tok.text == "}":
            depth -= 1
    return start, stream.pos - 1


def _parse_poly_list(stream, ctx_kind, tf, n=None):
    """{ p1 ; p2 ; ... } with n inferred from the largest x-index if absent."""
    start, end = _scan_braced(stream)
    tokens = stream.tokens
    if n is None:
        n = max(1, _count_x_vars(tokens, start, end))
    bring = BRing(tf.ext) if (ctx_kind == "bpoly" and tf.ext is not None) else None
    if ctx_kind == "bpoly" and bring is None:
        ctx_kind = "diffpoly"
    ctx = ExprContext(ctx_kind, tf.base, n=n, bring=bring)
    sub = _Stream(tokens[start:end] + [Token("eof", "", tokens[end].line, tokens[end].col)])
    polys = []
    while True:
        sub.skip_newlines()
        if sub.peek().kind == "eof":
            break
        polys.append(parse_expression(sub, ctx))
        sub.skip_newlines()
        tok = sub.peek()
        if tok.kind == "punct" and tok.text == ";":
            sub.next()
            continue
        if tok.kind == "eof":
            break
        sub.error("expected ';' between polynomials", expected={";", "}"})
    return polys, n, ctx


def _parse_let(stream, tf: TaskFile):
    name_tok = stream.expect("ident", expected={"name"})
    name = name_tok.text
    if name in tf.decls:
        raise ParseError(f"duplicate declaration {name!r}", name_tok.line, name_tok.col)
    stream.expect("punct", "=")
    kind_tok = stream.expect("ident", expected={"poly", "set", "system", "kernel", "algpoly"})
    kind = kind_tok.text
    if kind == "poly":
        # single differential polynomial over K (or B when b<j> occurs)
        rest_start = stream.pos
        uses_b = False
        for tok in stream.tokens[rest_start:]:
            if tok.kind in ("newline", "eof"):
                break
            if tok.kind == "ident" and B_RE.match(tok.text):
                uses_b = True
        n = 1
        for tok in stream.tokens[rest_start:]:
            if tok.kind in ("newline", "eof"):
                break
            if tok.kind == "ident":
                xm = X_RE.match(tok.text)
                if xm:
                    n = max(n, int(xm.group(1)))
        if uses_b:
            if tf.ext is None:
                raise ParseError("b<j> used without an extension block", kind_tok.line, kind_tok.col)
            ctx = ExprContext("bpoly", tf.base, n=n, bring=BRing(tf.ext))
        else:
            ctx = ExprContext("diffpoly", tf.base, n=n)
        val = parse_expression(stream, ctx)
        tf.decls[name] = val
        tf.decl_kinds[name] = "poly"
    elif kind == "algpoly":
        rest_start = stream.pos
        n = 1
        for tok in stream.tokens[rest_start:]:
            if tok.kind in ("newline", "eof"):
                break
            if tok.kind == "ident":
                xm = X_RE.match(tok.text)
                if xm:
                    n = max(n, int(xm.group(1)))
        ctx = ExprContext("algpoly", tf.base, n=n)
        val = parse_expression(stream, ctx)
        tf.decls[name] = val
        tf.decl_kinds[name] = "algpoly"
    elif kind == "set":
        polys, n, _ = _parse_poly_list(stream, "diffpoly", tf)
        tf.decls[name] = ("set", polys, n)
        tf.decl_kinds[name] = "set"
    elif kind == "system":
        polys, n, _ = _parse_poly_list(stream, "bpoly", tf)
        tf.decls[name] = ("system", polys, n)
        tf.decl_kinds[name] = "system"
    elif kind == "kernel":
        tf.decls[name] = _parse_kernel_block(stream, tf)
        tf.decl_kinds[name] = "kernel"
    else:
        raise ParseError(
            f"unknown declaration kind {kind!r}", kind_tok.line, kind_tok.col,
            expected={"poly", "set", "system", "kernel", "algpoly"},
        )
    _expect_line_end(stream)


def _parse_kernel_block(stream, tf: TaskFile) -> KernelPresentation:
    stream.expect("punct", "{")
    n = None
    r = None
    markers = {}
    pending = []
    while True:
        stream.skip_newlines()
        tok = stream.peek()
        if tok.kind == "punct" and tok.text == "}":
            stream.next()
            break
        key = stream.expect("ident", expected={"vars", "length", "a<i>[xi] minpoly/transcendental"})
        if key.text == "vars":
            n = int(stream.expect("int", expected={"integer"}).text)
        elif key.text == "length":
            r = int(stream.expect("int", expected={"integer"}).text)
        else:
            am = A_RE.match(key.text)
            if not am:
                raise ParseError(f"unknown kernel entry {key.text!r}", key.line, key.col,
                                 expected={"vars", "length", "a<i>"})
            if n is None or r is None:
                raise ParseError("declare vars and length before coordinates", key.line, key.col)
            i = int(am.group(1))
            ctx0 = ExprContext("kernel", tf.base, kernel_n=n)
            xi = _parse_multiindex(stream, ctx0)
            marker_tok = stream.expect("ident", expected={"minpoly", "transcendental"})
            coord = DerIndet(xi, i)
            if marker_tok.text == "transcendental":
                pending.append((coord, None))
            elif marker_tok.text == "minpoly":
                ctx = ExprContext("kernel", tf.base, kernel_n=n, z_var=coord)
                val = parse_expression(stream, ctx)
                pending.append((coord, val))
            else:
                raise ParseError("expected 'minpoly' or 'transcendental'", marker_tok.line, marker_tok.col)
        _expect_line_end(stream)
    if n is None or r is None:
        stream.error("kernel block needs vars and length")
    for coord, mp in pending:
        markers[coord] = mp
    return KernelPresentation(tf.base, n, r, markers)


TASK_OPS = {
    # op name -> (argument spec, description); arguments are parsed generically
    "validate_field": [],
    "validate_extension": [],
    "descend": ["name"],
    "standardize": ["name"],
    "unit_table": ["name"],
    "counit": ["name"],
    "divide": ["name", "name"],
    "membership": ["name", "name"],
    "autoreduce": ["names"],
    "theta": ["name", "int"],
    "ucm": ["name", "int"],
    "jet": ["name", "int"],
    "theta_partition": ["name", "int", "int"],
    "prolong": ["int", "polylist"],
    "tau1": ["polylist"],
    "gamma": ["int", "int", "int"],
    "bounds": ["int", "int", "int"],
    "alpha_beta": ["int", "int"],
    "ackermann": ["int", "int"],
    "index_maps": ["int", "int"],
    "leaders": ["name"],
    "validate_kernel": ["name"],
    "leader_data": ["name"],
    "h_of_set": ["name"],
    "compare": ["name", "name"],
}


def _parse_task(stream, tf: TaskFile):
    op_tok = stream.expect("ident", expected=set(TASK_OPS))
    op = op_tok.text
    if op not in TASK_OPS:
        raise ParseError(f"unknown task {op!r}", op_tok.line, op_tok.col, expected=set(TASK_OPS))
    spec = TASK_OPS[op]
    args = []
    for slot in spec:
        if slot == "int":
            args.append(int(stream.expect("int", expected={"integer"}).text))
        elif slot == "name":
            tok = stream.expect("ident", expected={"declared name"})
            if tok.text not in tf.decls:
                raise ParseError(f"unknown name {tok.text!r}", tok.line, tok.col,
                                 expected=set(tf.decls) or {"a declared name"})
            args.append(tok.text)
        elif slot == "names":
            names = []
            while stream.peek().kind == "ident" and stream.peek().text != "as":
                tok = stream.next()
                if tok.text not in tf.decls:
                    raise ParseError(f"unknown name {tok.text!r}", tok.line, tok.col,
                                     expected=set(tf.decls) or {"a declared name"})
                names.append(tok.text)
            if not names:
                stream.error("expected at least one declared name")
            args.append(names)
        elif slot == "polylist":
            polys, n, _ = _parse_poly_list(stream, "algpoly", tf)
            args.append((polys, n))
    label = None
    if stream.peek().kind == "ident" and stream.peek().text == "as":
        stream.next()
        label = stream.expect("ident", expected={"label"}).text
    _expect_line_end(stream)
    tf.tasks.append(Task(op, args, label, op_tok.line))