"""Causal query language: parsing, ASTs and intervention matrices.

Grammar (whitespace free-form, ``#`` starts a comment):

    expr    := term (('+'|'-') term)*
    term    := [coef '*'] 'P{' event (',' event)* '}'
    event   := VAR outcomeArgs? '=' INT
    args    := '(' arg (',' arg)* ')'
    arg     := VAR '=' INT          fixed intervention
             | VAR '(' arg* ')'     nested natural value under interventions
    coef    := rational or decimal literal, parsed exactly

``P{Y(X=1)=1}`` is a potential event, ``P{Y=1}`` a factual one; several
events inside one ``P{...}`` form a joint atomic query.

An intervention matrix records, per (variable, directed path into the
outcome), the externally forced value if any.  A fixed intervention at
nesting depth d applies to every path that starts at the target variable
and ends with the d-long context suffix; deeper (more specific) contexts
override shallower ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .canonical import PointwiseConstraint
from .model import CausalGraph


class QuerySyntaxError(SyntaxError):
    def __init__(self, message, pos=None):
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos


class UnknownVariableError(ValueError):
    pass


class ValueOutOfRangeError(ValueError):
    pass


class PathNotInGraphError(ValueError):
    pass


class ConflictingInterventionError(ValueError):
    pass


@dataclass(frozen=True)
class OutcomeTerm:
    """A variable together with the interventions under which it is read.

    ``interventions`` holds (target, value) pairs where value is either a
    fixed integer or a nested OutcomeTerm (the target evaluates naturally
    under the nested interventions).
    """

    variable: str
    interventions: tuple = ()

    def render(self) -> str:
        if not self.interventions:
            return self.variable
        parts = []
        for target, val in self.interventions:
            if isinstance(val, OutcomeTerm):
                parts.append(val.render())
            else:
                parts.append(f"{target}={val}")
        return f"{self.variable}({', '.join(parts)})"


@dataclass(frozen=True)
class OutcomeEvent:
    """One conjunct of an atomic query: variable, value, potential or factual."""

    variable: str
    value: int
    term: OutcomeTerm | None = None  # None: factual event

    def render(self) -> str:
        head = self.term.render() if self.term is not None else self.variable
        return f"{head}={self.value}"


@dataclass(frozen=True)
class AtomicQuery:
    events: tuple[OutcomeEvent, ...]

    def render(self) -> str:
        return "P{" + ", ".join(ev.render() for ev in self.events) + "}"


@dataclass(frozen=True)
class QueryExpr:
    """Linear combination of atomic queries with exact rational coefficients."""

    terms: tuple[tuple[Fraction, AtomicQuery], ...]

    def render(self) -> str:
        out = []
        for i, (coef, atomic) in enumerate(self.terms):
            sign = "-" if coef < 0 else "+"
            mag = abs(coef)
            piece = atomic.render() if mag == 1 else f"{mag}*{atomic.render()}"
            if i == 0:
                out.append(piece if coef > 0 else f"-{piece}")
            else:
                out.append(f" {sign} {piece}")
        return "".join(out)


# -- tokenizer / recursive descent ---------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(\.\d+)?(/\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[P]?\{|\}|\(|\)|,|=|\*|\+|-)
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup not in ("ws", "comment"):
            tokens.append((m.group(), pos))
        pos = m.end()
    tokens.append(("<end>", len(text)))
    return tokens


def _parse_rational(tok: str) -> Fraction:
    # decimal literals become exact rationals: 0.5 -> 1/2
    return Fraction(tok)


class _Parser:
    def __init__(self, text, graph: CausalGraph | None):
        self.text = text
        self.graph = graph
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def pos(self):
        return self.tokens[self.i][1]

    def take(self, expected=None):
        tok, pos = self.tokens[self.i]
        if expected is not None and tok != expected:
            raise QuerySyntaxError(f"expected {expected!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def at_end(self):
        return self.peek() == "<end>"

    # expr := term (('+'|'-') term)*
    def parse_expr(self) -> QueryExpr:
        terms = []
        sign = Fraction(1)
        if self.peek() == "-":
            self.take()
            sign = Fraction(-1)
        elif self.peek() == "+":
            self.take()
        terms.append(self.parse_term(sign))
        while self.peek() in ("+", "-"):
            sign = Fraction(-1) if self.take() == "-" else Fraction(1)
            terms.append(self.parse_term(sign))
        if not self.at_end():
            raise QuerySyntaxError(f"trailing input {self.peek()!r}", self.pos())
        return QueryExpr(tuple(terms))

    # term := [coef '*'] 'P{' event (',' event)* '}'
    def parse_term(self, sign: Fraction):
        coef = Fraction(1)
        tok = self.peek()
        if re.fullmatch(r"\d+(\.\d+)?(/\d+)?", tok):
            coef = _parse_rational(self.take())
            self.take("*")
        self.take("P{")
        events = [self.parse_event()]
        while self.peek() == ",":
            self.take()
            events.append(self.parse_event())
        self.take("}")
        return (sign * coef, AtomicQuery(tuple(events)))

    # event := VAR args? '=' INT
    def parse_event(self) -> OutcomeEvent:
        name = self.parse_name()
        term = None
        if self.peek() == "(":
            term = OutcomeTerm(name, self.parse_args())
        self.take("=")
        value = self.parse_value(name)
        return OutcomeEvent(name, value, term)

    def parse_args(self):
        self.take("(")
        args = [self.parse_arg()]
        while self.peek() == ",":
            self.take()
            args.append(self.parse_arg())
        self.take(")")
        return tuple(args)

    # arg := VAR '=' INT | VAR '(' ... ')'
    def parse_arg(self):
        name = self.parse_name()
        if self.peek() == "(":
            nested = OutcomeTerm(name, self.parse_args())
            return (name, nested)
        self.take("=")
        return (name, self.parse_value(name))

    def parse_name(self):
        tok, pos = self.tokens[self.i]
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            raise QuerySyntaxError(f"expected a variable name, found {tok!r}", pos)
        self.i += 1
        if self.graph is not None:
            try:
                self.graph.variable(tok)
            except Exception:
                raise UnknownVariableError(f"unknown variable {tok!r}") from None
        return tok

    def parse_value(self, varname):
        tok, pos = self.tokens[self.i]
        if not re.fullmatch(r"\d+", tok):
            raise QuerySyntaxError(f"expected an integer value, found {tok!r}", pos)
        self.i += 1
        value = int(tok)
        if self.graph is not None:
            card = self.graph.variable(varname).cardinality
            if not 0 <= value < card:
                raise ValueOutOfRangeError(
                    f"value {value} out of range for {varname} (cardinality {card})")
        return value


def parse_query(text: str, g: CausalGraph | None = None) -> QueryExpr:
    """Parse a query expression, resolving names against ``g`` when given."""
    return _Parser(text, g).parse_expr()


# -- constraints ----------------------------------------------------------

@dataclass(frozen=True)
class LinearConstraint:
    """Probability-level constraint, one side a query expression.

    Compiled later into an LP row over q: lhs - rhs REL 0.  ``rhs`` is
    either a QueryExpr or a rational constant.
    """

    lhs: QueryExpr
    relation: str
    rhs: object  # QueryExpr | Fraction

    def render(self) -> str:
        rhs = self.rhs.render() if isinstance(self.rhs, QueryExpr) else str(self.rhs)
        return f"{self.lhs.render()} {self.relation} {rhs}"


def parse_constraint(text: str, g: CausalGraph):
    """Parse a constraint line into a PointwiseConstraint or LinearConstraint.

    ``V(P=1) >= V(P=0)`` (no P{...}) is an almost-sure counterfactual
    comparison on one variable and compiles to response-row exclusions.
    Anything with probabilities, e.g. ``P{Y(X=1)=1} >= 0.2`` or
    ``P{A(B=1)=1} >= P{A(B=0)=1}``, becomes a linear LP constraint.
    """
    m = re.search(r"(<=|>=|=)", text)
    if not m:
        raise QuerySyntaxError("constraint needs one of <=, >=, =")
    rel = m.group(1)
    lhs_text, rhs_text = text[:m.start()], text[m.end():]

    if "P{" not in text:
        lhs_var, lhs_args = _parse_pointwise_side(lhs_text, g)
        rhs_var, rhs_args = _parse_pointwise_side(rhs_text, g)
        if lhs_var != rhs_var:
            raise QuerySyntaxError(
                "pointwise constraints must compare the same variable on both sides; "
                "use P{...} forms for cross-variable constraints")
        return PointwiseConstraint(lhs_var, lhs_args, rhs_args, rel)

    lhs = parse_query(lhs_text, g)
    rhs_text = rhs_text.strip()
    if re.fullmatch(r"-?\d+(\.\d+)?(/\d+)?", rhs_text):
        rhs = Fraction(rhs_text)
    else:
        rhs = parse_query(rhs_text, g)
    return LinearConstraint(lhs, rel, rhs)


def _parse_pointwise_side(text, g: CausalGraph):
    text = text.strip()
    m = re.fullmatch(r"([A-Za-z_][A-Za-z_0-9]*)\s*\(([^()]*)\)", text)
    if not m:
        raise QuerySyntaxError(f"malformed pointwise term {text!r}")
    var = m.group(1)
    g.variable(var)
    args = []
    for piece in m.group(2).split(","):
        piece = piece.strip()
        am = re.fullmatch(r"([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(\d+)", piece)
        if not am:
            raise QuerySyntaxError(f"malformed argument {piece!r}")
        name, val = am.group(1), int(am.group(2))
        g.variable(name)
        args.append((name, val))
    return var, tuple(args)


# -- intervention matrices -------------------------------------------------

@dataclass(frozen=True)
class InterventionMatrix:
    """Rows: variables; columns: directed paths ending at the outcome.

    ``entries[(var, path)]`` is the forced value.  Only entries whose row
    variable heads the path are ever consulted by the evaluator; the
    builder writes no others.
    """

    outcome: str
    paths: tuple[tuple[str, ...], ...]
    entries: dict  # (var, path tuple) -> int

    def entry(self, var: str, path: tuple) -> int | None:
        return self.entries.get((var, path))

    @staticmethod
    def path_key(path) -> str:
        return " -> ".join(path)

    def render(self) -> str:
        lines = [f"outcome {self.outcome}"]
        for path in self.paths:
            key = self.path_key(path)
            forced = self.entries.get((path[0], path))
            lines.append(f"  [{key}] = {'∅' if forced is None else forced}")
        return "\n".join(lines)


def enumerate_paths_to(g: CausalGraph, outcome: str):
    """All directed paths ending at ``outcome`` (including the trivial one)."""
    paths = []

    def extend(path):
        paths.append(tuple(path))
        head = path[0]
        for pa in g.parents(head):
            extend([pa] + path)

    extend([outcome])
    # deterministic column order: by length then lexicographic
    return tuple(sorted(paths, key=lambda p: (len(p), p)))


def _collect_assignments(term: OutcomeTerm, ctx, out):
    """Flatten nested interventions into (target, context suffix, value)."""
    for target, val in term.interventions:
        if isinstance(val, OutcomeTerm):
            if val.variable != target:
                raise ConflictingInterventionError(
                    f"nested term for {target} must be headed by {target}")
            _collect_assignments(val, (target,) + ctx, out)
        else:
            out.append((target, ctx, val))


def build_intervention_matrix(term: OutcomeTerm, g: CausalGraph) -> InterventionMatrix:
    """Path-indexed intervention table for one potential outcome.

    A fixed intervention (V=v) recorded under context suffix ctx applies
    to every enumerated path that starts at V and ends with ctx.  Longer
    contexts are more specific and win; equal-length conflicting
    assignments are rejected.
    """
    g.variable(term.variable)
    paths = enumerate_paths_to(g, term.variable)
    assignments = []
    _collect_assignments(term, (term.variable,), assignments)

    chosen = {}  # (var, path) -> (ctx_len, value)
    for target, ctx, value in assignments:
        tv = g.variable(target)
        if not 0 <= value < tv.cardinality:
            raise ValueOutOfRangeError(
                f"value {value} out of range for {target} "
                f"(cardinality {tv.cardinality})")
        hit = False
        for path in paths:
            if path[0] != target:
                continue
            if len(path) < len(ctx) or path[-len(ctx):] != ctx:
                continue
            hit = True
            key = (target, path)
            prev = chosen.get(key)
            if prev is None or len(ctx) > prev[0]:
                chosen[key] = (len(ctx), value)
            elif len(ctx) == prev[0] and prev[1] != value:
                raise ConflictingInterventionError(
                    f"conflicting interventions on {target} along "
                    f"{InterventionMatrix.path_key(path)}")
        if not hit:
            raise PathNotInGraphError(
                f"intervention on {target} matches no directed path into "
                f"{term.variable} under context "
                f"{InterventionMatrix.path_key(ctx)}")

    entries = {key: value for key, (_, value) in chosen.items()}
    return InterventionMatrix(term.variable, paths, entries)
