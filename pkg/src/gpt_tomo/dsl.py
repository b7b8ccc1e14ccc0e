"""A small textual language for wiring diagrams over the three backends.

Programs declare systems, states, effects and processes, then run one
expression.  Closed diagrams evaluate to a probability.

Grammar::

    program  := decl* "run" expr
    decl     := "system" ID backend INT ";"
              | "state" ID "on" syslist "=" literal ";"
              | "effect" ID "on" syslist "=" literal ";"
              | "proc" ID "on" syslist "->" syslist "=" literal ";"
    backend  := "classical" | "quantum" | "real"
    syslist  := ID ("," ID)*
    literal  := "maxmix" | "bell" | "bell_effect" | "unit"
              | "kraus" "[" matrix ("," matrix)* "]"
              | "stoch" "[" matrix "]"
    matrix   := "[" row ("," row)* "]"
    row      := "[" entry ("," entry)* "]"
    entry    := number | "[" number "," number "]"      # [re, im]
    expr     := par ("." par)*                          # sequential
    par      := atom ("||" atom)*                       # parallel
    atom     := "(" expr ")" | "id" "[" ID "]" | ID

``f . g`` runs ``g`` first (right-to-left application); ``||`` binds tighter
than ``.``.  Diagnostics are positioned as ``file:line:col: message`` and
parsing never panics on malformed input.  The conventional file extension is
``.opt``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
import numpy as np

from . import backends as bk
from .core import (
    BACKENDS,
    CLASSICAL,
    DEFAULT_TOL,
    EffectVector,
    ProcessRep,
    StateVector,
    SystemDescriptor,
    apply,
    compose,
    deterministic_effect,
    effect_from_coords,
    effect_from_matrix,
    effect_process,
    identity_process,
    kraus_process,
    preparation_process,
    stochastic_process,
    tensor_processes,
    tensor_systems,
    trivial,
    trivial_state,
)

KEYWORDS = {"system", "state", "effect", "proc", "on", "run", "id"}
BACKEND_NAMES = set(BACKENDS)
BUILTINS = {"maxmix", "bell", "bell_effect", "unit"}


class DslError(Exception):
    """Positioned diagnostic for parse, type or evaluation failures."""

    def __init__(self, message: str, line: int, col: int, filename: str = "<string>"):
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename
        super().__init__(f"{filename}:{line}:{col}: {message}")


# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<par>\|\|)
  | (?P<sym>[;,.=()\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, filename: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslError(f"unexpected character {text[pos]!r}", line, col, filename)
        kind = m.lastgroup
        span = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, span, line, col))
        newlines = span.count("\n")
        if newlines:
            line += newlines
            col = len(span) - span.rfind("\n")
        else:
            col += len(span)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

Pos = tuple[int, int]


@dataclass(frozen=True)
class SystemDecl:
    name: str
    backend: str
    dim: int
    pos: Pos = field(compare=False)


@dataclass(frozen=True)
class BuiltinLit:
    name: str


@dataclass(frozen=True)
class KrausLit:
    matrices: tuple[tuple[tuple[complex, ...], ...], ...]


@dataclass(frozen=True)
class StochLit:
    matrix: tuple[tuple[float, ...], ...]


Literal = BuiltinLit | KrausLit | StochLit


@dataclass(frozen=True)
class ValueDecl:
    """State, effect or process declaration; states have no inputs, effects no outputs."""

    role: str  # "state" | "effect" | "proc"
    name: str
    in_systems: tuple[str, ...]
    out_systems: tuple[str, ...]
    literal: Literal
    pos: Pos = field(compare=False)


@dataclass(frozen=True)
class Atom:
    name: str
    pos: Pos = field(compare=False)


@dataclass(frozen=True)
class Ident:
    system: str
    pos: Pos = field(compare=False)


@dataclass(frozen=True)
class Seq:
    left: "Expr"
    right: "Expr"
    pos: Pos = field(compare=False)


@dataclass(frozen=True)
class Par:
    left: "Expr"
    right: "Expr"
    pos: Pos = field(compare=False)


Expr = Atom | Ident | Seq | Par


@dataclass(frozen=True)
class CircuitAST:
    systems: tuple[SystemDecl, ...]
    values: tuple[ValueDecl, ...]
    run: Expr


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.tokens = tokens
        self.filename = filename
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> DslError:
        tok = tok or self.peek()
        return DslError(message, tok.line, tok.col, self.filename)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            shown = tok.text if tok.text else "end of input"
            raise self.error(f"expected {want!r}, found {shown!r}", tok)
        return self.next()

    def expect_ident(self, role: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            shown = tok.text if tok.text else "end of input"
            raise self.error(f"expected {role}, found {shown!r}", tok)
        return self.next()

    # --- declarations ---

    def parse_program(self) -> CircuitAST:
        systems: list[SystemDecl] = []
        values: list[ValueDecl] = []
        declared: set[str] = set()
        while True:
            tok = self.peek()
            if tok.kind == "ident" and tok.text == "run":
                break
            if tok.kind == "eof":
                raise self.error("expected a declaration or 'run'", tok)
            if tok.kind != "ident" or tok.text not in ("system", "state", "effect", "proc"):
                raise self.error(
                    f"expected 'system', 'state', 'effect', 'proc' or 'run', found {tok.text!r}",
                    tok,
                )
            decl = self.parse_decl(tok.text)
            name = decl.name
            if name in declared:
                raise DslError(f"duplicate declaration of {name!r}", *decl.pos, self.filename)
            declared.add(name)
            if isinstance(decl, SystemDecl):
                systems.append(decl)
            else:
                values.append(decl)
        self.expect("ident", "run")
        expr = self.parse_expr()
        self.expect("eof")
        return CircuitAST(tuple(systems), tuple(values), expr)

    def parse_decl(self, head: str) -> SystemDecl | ValueDecl:
        start = self.next()  # the keyword
        name = self.expect_ident(f"{head} name")
        if head == "system":
            backend = self.expect_ident("backend name")
            if backend.text not in BACKEND_NAMES:
                raise self.error(
                    f"unknown backend {backend.text!r} (expected classical, quantum or real)",
                    backend,
                )
            dim = self.expect("number")
            try:
                d = int(dim.text)
            except ValueError:
                raise self.error(f"system dimension must be an integer, found {dim.text!r}", dim)
            if d < 1:
                raise self.error("system dimension must be positive", dim)
            self.expect("sym", ";")
            return SystemDecl(name.text, backend.text, d, (start.line, start.col))
        self.expect("ident", "on")
        first = self.parse_syslist()
        if head == "proc":
            self.expect("arrow")
            second = self.parse_syslist()
            ins, outs = first, second
        elif head == "state":
            ins, outs = (), first
        else:
            ins, outs = first, ()
        self.expect("sym", "=")
        lit = self.parse_literal()
        self.expect("sym", ";")
        return ValueDecl(head, name.text, ins, outs, lit, (start.line, start.col))

    def parse_syslist(self) -> tuple[str, ...]:
        names = [self.expect_ident("system name").text]
        while self.peek().kind == "sym" and self.peek().text == ",":
            self.next()
            names.append(self.expect_ident("system name").text)
        return tuple(names)

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(f"expected a literal, found {tok.text!r}", tok)
        if tok.text in BUILTINS:
            self.next()
            return BuiltinLit(tok.text)
        if tok.text == "kraus":
            self.next()
            self.expect("sym", "[")
            mats = [self.parse_matrix(complex_ok=True)]
            while self.peek().text == ",":
                self.next()
                mats.append(self.parse_matrix(complex_ok=True))
            self.expect("sym", "]")
            return KrausLit(tuple(mats))
        if tok.text == "stoch":
            self.next()
            self.expect("sym", "[")
            mat = self.parse_matrix(complex_ok=False)
            self.expect("sym", "]")
            return StochLit(tuple(tuple(float(x.real) for x in row) for row in mat))
        raise self.error(f"unknown literal {tok.text!r}", tok)

    def parse_matrix(self, complex_ok: bool) -> tuple[tuple[complex, ...], ...]:
        self.expect("sym", "[")
        rows = [self.parse_row(complex_ok)]
        while self.peek().text == ",":
            self.next()
            rows.append(self.parse_row(complex_ok))
        self.expect("sym", "]")
        if len({len(r) for r in rows}) != 1:
            raise self.error("matrix rows have unequal lengths")
        return tuple(rows)

    def parse_row(self, complex_ok: bool) -> tuple[complex, ...]:
        self.expect("sym", "[")
        entries = [self.parse_entry(complex_ok)]
        while self.peek().text == ",":
            self.next()
            entries.append(self.parse_entry(complex_ok))
        self.expect("sym", "]")
        return tuple(entries)

    def parse_entry(self, complex_ok: bool) -> complex:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return complex(float(tok.text))
        if tok.kind == "sym" and tok.text == "[":
            if not complex_ok:
                raise self.error("stochastic entries must be plain numbers", tok)
            self.next()
            re_tok = self.expect("number")
            self.expect("sym", ",")
            im_tok = self.expect("number")
            self.expect("sym", "]")
            return complex(float(re_tok.text), float(im_tok.text))
        raise self.error(f"expected a number, found {tok.text!r}", tok)

    # --- expressions ---

    def parse_expr(self) -> Expr:
        node = self.parse_par()
        while self.peek().kind == "sym" and self.peek().text == ".":
            op = self.next()
            right = self.parse_par()
            node = Seq(node, right, (op.line, op.col))
        return node

    def parse_par(self) -> Expr:
        node = self.parse_atom()
        while self.peek().kind == "par":
            op = self.next()
            right = self.parse_atom()
            node = Par(node, right, (op.line, op.col))
        return node

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "sym" and tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect("sym", ")")
            return inner
        if tok.kind == "ident" and tok.text == "id":
            self.next()
            self.expect("sym", "[")
            name = self.expect_ident("system name")
            self.expect("sym", "]")
            return Ident(name.text, (tok.line, tok.col))
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            return Atom(tok.text, (tok.line, tok.col))
        shown = tok.text if tok.text else "end of input"
        raise self.error(f"expected an expression, found {shown!r}", tok)


def parse(text: str, filename: str = "<string>") -> CircuitAST:
    """Parse a program, raising a positioned ``DslError`` on malformed input."""
    return _Parser(tokenize(text, filename), filename).parse_program()


# ---------------------------------------------------------------------------
# Pretty printer (parse . print round-trips the AST)
# ---------------------------------------------------------------------------

def _print_entry(z: complex) -> str:
    if z.imag == 0.0:
        return _print_num(z.real)
    return f"[{_print_num(z.real)}, {_print_num(z.imag)}]"


def _print_num(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def _print_literal(lit: Literal) -> str:
    if isinstance(lit, BuiltinLit):
        return lit.name
    if isinstance(lit, StochLit):
        rows = ", ".join("[" + ", ".join(_print_num(x) for x in row) + "]" for row in lit.matrix)
        return f"stoch[[{rows}]]"
    mats = ", ".join(
        "[" + ", ".join("[" + ", ".join(_print_entry(z) for z in row) + "]" for row in m) + "]"
        for m in lit.matrices
    )
    return f"kraus[{mats}]"


def _print_expr(expr: Expr, parent: str = "") -> str:
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Ident):
        return f"id[{expr.system}]"
    if isinstance(expr, Seq):
        text = f"{_print_expr(expr.left, 'seq')} . {_print_expr(expr.right, 'seq-right')}"
        return f"({text})" if parent in ("par", "seq-right") else text
    text = f"{_print_expr(expr.left, 'par')} || {_print_expr(expr.right, 'par-right')}"
    if parent in ("par-right",):
        return f"({text})"
    return text


def pretty(ast: CircuitAST) -> str:
    lines = []
    for s in ast.systems:
        lines.append(f"system {s.name} {s.backend} {s.dim};")
    for v in ast.values:
        lit = _print_literal(v.literal)
        if v.role == "state":
            lines.append(f"state {v.name} on {', '.join(v.out_systems)} = {lit};")
        elif v.role == "effect":
            lines.append(f"effect {v.name} on {', '.join(v.in_systems)} = {lit};")
        else:
            ins = ", ".join(v.in_systems)
            outs = ", ".join(v.out_systems)
            lines.append(f"proc {v.name} on {ins} -> {outs} = {lit};")
    lines.append(f"run {_print_expr(ast.run)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Typechecker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TypedExpr:
    node: Expr
    ins: tuple[str, ...]
    outs: tuple[str, ...]
    children: tuple["TypedExpr", ...]


@dataclass(frozen=True)
class TypedProgram:
    ast: CircuitAST
    systems: dict[str, SystemDescriptor]
    values: dict[str, ValueDecl]
    run: TypedExpr
    filename: str


def typecheck(ast: CircuitAST, filename: str = "<string>") -> TypedProgram:
    """Resolve wire labels and compute system lists bottom-up."""
    systems: dict[str, SystemDescriptor] = {}
    for s in ast.systems:
        systems[s.name] = SystemDescriptor(s.backend, (s.dim,))
    values: dict[str, ValueDecl] = {}
    for v in ast.values:
        for label in v.in_systems + v.out_systems:
            if label not in systems:
                raise DslError(f"unknown system {label!r}", *v.pos, filename)
        backs = {systems[n].backend for n in v.in_systems + v.out_systems}
        if len(backs) > 1:
            raise DslError(f"declaration {v.name!r} mixes backends {sorted(backs)}", *v.pos, filename)
        values[v.name] = v

    def check(expr: Expr) -> TypedExpr:
        if isinstance(expr, Atom):
            if expr.name not in values:
                raise DslError(f"unknown identifier {expr.name!r}", *expr.pos, filename)
            v = values[expr.name]
            return TypedExpr(expr, v.in_systems, v.out_systems, ())
        if isinstance(expr, Ident):
            if expr.system not in systems:
                raise DslError(f"unknown system {expr.system!r}", *expr.pos, filename)
            return TypedExpr(expr, (expr.system,), (expr.system,), ())
        left = check(expr.left)
        right = check(expr.right)
        if isinstance(expr, Seq):
            if right.outs != left.ins:
                raise DslError(
                    f"cannot sequence: right side outputs [{', '.join(right.outs)}] "
                    f"but left side expects [{', '.join(left.ins)}]",
                    *expr.pos,
                    filename,
                )
            return TypedExpr(expr, right.ins, left.outs, (left, right))
        wires = left.ins + left.outs + right.ins + right.outs
        backs = {systems[n].backend for n in wires}
        if len(backs) > 1:
            raise DslError(
                f"cannot compose mixed backends {sorted(backs)} in parallel", *expr.pos, filename
            )
        return TypedExpr(expr, left.ins + right.ins, left.outs + right.outs, (left, right))

    return TypedProgram(ast, systems, values, check(ast.run), filename)


# ---------------------------------------------------------------------------
# Evaluator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalResult:
    kind: str  # "scalar" | "state" | "effect" | "process"
    payload: float | StateVector | EffectVector | ProcessRep


def _composite(prog: TypedProgram, names: tuple[str, ...], backend_hint: str | None) -> SystemDescriptor:
    if not names:
        return trivial(backend_hint or CLASSICAL)
    sys = prog.systems[names[0]]
    for n in names[1:]:
        sys = tensor_systems(sys, prog.systems[n])
    return sys


def _build_builtin(
    prog: TypedProgram, v: ValueDecl, tol: float
) -> ProcessRep:
    name = v.literal.name
    wires = v.in_systems or v.out_systems
    sys = _composite(prog, wires, None)
    if name == "maxmix":
        if v.role != "state":
            raise DslError("'maxmix' is a state literal", *v.pos, prog.filename)
        return preparation_process(bk.complete_state(sys), tol=tol)
    if name == "unit":
        if v.role != "effect":
            raise DslError("'unit' is an effect literal", *v.pos, prog.filename)
        return effect_process(deterministic_effect(sys), tol=tol)
    if name in ("bell", "bell_effect"):
        if len(wires) != 2 or prog.systems[wires[0]].dims != prog.systems[wires[1]].dims:
            raise DslError(
                f"'{name}' needs two systems of equal dimension", *v.pos, prog.filename
            )
        local = prog.systems[wires[0]]
        if name == "bell":
            if v.role != "state":
                raise DslError("'bell' is a state literal", *v.pos, prog.filename)
            return preparation_process(bk.maximally_entangled_state(local), tol=tol)
        if v.role != "effect":
            raise DslError("'bell_effect' is an effect literal", *v.pos, prog.filename)
        return effect_process(bk.maximally_entangled_effect(local), tol=tol)
    raise DslError(f"unknown builtin {name!r}", *v.pos, prog.filename)


def _build_value(prog: TypedProgram, v: ValueDecl, tol: float) -> ProcessRep:
    if isinstance(v.literal, BuiltinLit):
        return _build_builtin(prog, v, tol)
    inp = _composite(prog, v.in_systems, _backend_of(prog, v))
    out = _composite(prog, v.out_systems, _backend_of(prog, v))
    try:
        if isinstance(v.literal, StochLit):
            return stochastic_process(inp, out, np.array(v.literal.matrix, dtype=float), tol=tol)
        mats = [np.array(m, dtype=complex) for m in v.literal.matrices]
        for m in mats:
            if m.shape != (out.total_dim, inp.total_dim):
                raise ValueError(
                    f"Kraus operator has shape {m.shape}, expected "
                    f"({out.total_dim}, {inp.total_dim})"
                )
        return kraus_process(inp, out, mats, tol=tol)
    except ValueError as exc:
        raise DslError(str(exc), *v.pos, prog.filename) from exc


def _backend_of(prog: TypedProgram, v: ValueDecl) -> str:
    wires = v.in_systems + v.out_systems
    return prog.systems[wires[0]].backend if wires else CLASSICAL


def evaluate(prog: TypedProgram, tol: float = DEFAULT_TOL) -> EvalResult:
    """Contract the run expression; a closed diagram yields a probability."""
    cache: dict[str, ProcessRep] = {}

    def atom_value(name: str, pos: Pos) -> ProcessRep:
        if name not in cache:
            cache[name] = _build_value(prog, prog.values[name], tol)
        return cache[name]

    def run(t: TypedExpr) -> ProcessRep:
        node = t.node
        if isinstance(node, Atom):
            return atom_value(node.name, node.pos)
        if isinstance(node, Ident):
            return identity_process(prog.systems[node.system])
        left, right = (run(ch) for ch in t.children)
        try:
            if isinstance(node, Seq):
                return compose(left, right, tol=tol)
            return tensor_processes(left, right, tol=tol)
        except ValueError as exc:
            raise DslError(str(exc), *node.pos, prog.filename) from exc

    proc = run(prog.run)
    if proc.input.is_trivial and proc.output.is_trivial:
        if proc.stoch is not None:
            scalar = float(proc.stoch[0, 0])
        else:
            scalar = float(sum(abs(k[0, 0]) ** 2 for k in proc.kraus))
        if scalar < -tol or scalar > 1.0 + max(tol, 1e-9):
            raise DslError(
                f"closed diagram evaluated outside [0, 1]: {scalar}",
                *_pos_of(prog.run.node),
                prog.filename,
            )
        return EvalResult("scalar", scalar)
    if proc.input.is_trivial:
        return EvalResult("state", apply(proc, trivial_state(proc.backend), tol=tol))
    if proc.output.is_trivial:
        if proc.stoch is not None:
            eff = effect_from_coords(proc.input, proc.stoch[0], tol=tol)
        else:
            eff = effect_from_matrix(
                proc.input, sum(k.conj().T @ k for k in proc.kraus), tol=tol
            )
        return EvalResult("effect", eff)
    return EvalResult("process", proc)


def _pos_of(node: Expr) -> Pos:
    return node.pos


def run_program(text: str, filename: str = "<string>", tol: float = DEFAULT_TOL) -> EvalResult:
    """Parse, typecheck and evaluate in one shot."""
    return evaluate(typecheck(parse(text, filename), filename), tol=tol)


def run_file(path: str, tol: float = DEFAULT_TOL) -> EvalResult:
    with open(path, "r", encoding="utf-8") as fh:
        return run_program(fh.read(), filename=path, tol=tol)
