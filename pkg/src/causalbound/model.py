"""Causal graph data model, left/right partition and structural checks.

A graph is a list of categorical variables split into a left side
(instrument-like, jointly conditioned on) and a right side, plus directed
edges and explicitly declared latent confounders.  Compilation refuses
graphs that break the structural requirements for linearity (acyclicity,
no right-to-left edges, no confounder straddling the sides); missing
side-wide confounding merely downgrades the tightness flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

LEFT = "left"
RIGHT = "right"


class GraphError(ValueError):
    """Base class for graph construction/validation errors."""


class GraphSyntaxError(GraphError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CycleError(GraphError):
    pass


class CrossSideEdgeError(GraphError):
    pass


class CrossSideConfounderError(GraphError):
    pass


class SideOrderingError(GraphError):
    pass


class UnobservedLeftVariableError(GraphError):
    pass


class QueryValidationError(ValueError):
    """Base class for query-versus-graph validation errors."""


class OutcomeOnLeftError(QueryValidationError):
    pass


class LeftInterventionHasLeftChildError(QueryValidationError):
    pass


class LeftNotAncestorOfInterventionError(QueryValidationError):
    pass


class ObservationWithLeftSideError(QueryValidationError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    cardinality: int
    side: str = RIGHT
    observed: bool = True

    def __post_init__(self):
        if self.cardinality < 2:
            raise GraphError(f"variable {self.name}: cardinality must be >= 2")
        if self.side not in (LEFT, RIGHT):
            raise GraphError(f"variable {self.name}: side must be 'left' or 'right'")

    @property
    def values(self):
        return range(self.cardinality)


@dataclass(frozen=True)
class Confounder:
    name: str
    children: tuple[str, ...]


@dataclass(frozen=True)
class CausalGraph:
    """Immutable causal DAG over categorical variables.

    Declaration order of ``variables`` is significant: it fixes every
    enumeration downstream (parent assignment order, response indices,
    probability symbol order).
    """

    variables: tuple[Variable, ...]
    edges: tuple[tuple[str, str], ...] = ()
    confounders: tuple[Confounder, ...] = ()
    _by_name: dict = field(init=False, repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        by_name = {}
        for v in self.variables:
            if v.name in by_name:
                raise GraphError(f"duplicate variable name {v.name!r}")
            by_name[v.name] = v
        for a, b in self.edges:
            for nm in (a, b):
                if nm not in by_name:
                    raise GraphError(f"edge references undeclared variable {nm!r}")
            if a == b:
                raise GraphError(f"self loop on {a!r}")
        if len(set(self.edges)) != len(self.edges):
            raise GraphError("duplicate edge")
        seen_conf = set()
        for c in self.confounders:
            if c.name in seen_conf or c.name in by_name:
                raise GraphError(f"duplicate confounder name {c.name!r}")
            seen_conf.add(c.name)
            for nm in c.children:
                if nm not in by_name:
                    raise GraphError(f"confounder {c.name} references undeclared variable {nm!r}")
        object.__setattr__(self, "_by_name", by_name)

    # -- basic accessors -------------------------------------------------

    def variable(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise GraphError(f"unknown variable {name!r}") from None

    @property
    def names(self):
        return [v.name for v in self.variables]

    @property
    def left(self):
        return [v for v in self.variables if v.side == LEFT]

    @property
    def right(self):
        return [v for v in self.variables if v.side == RIGHT]

    @property
    def left_count(self) -> int:
        return len(self.left)

    def parents(self, name: str):
        """Parents of ``name`` in declaration order."""
        ps = {a for a, b in self.edges if b == name}
        return [v.name for v in self.variables if v.name in ps]

    def children(self, name: str):
        cs = {b for a, b in self.edges if a == name}
        return [v.name for v in self.variables if v.name in cs]

    def descendants(self, name: str):
        out = set()
        stack = [name]
        while stack:
            cur = stack.pop()
            for ch in self.children(cur):
                if ch not in out:
                    out.add(ch)
                    stack.append(ch)
        return out

    def ancestors(self, name: str):
        out = set()
        stack = [name]
        while stack:
            cur = stack.pop()
            for pa in self.parents(cur):
                if pa not in out:
                    out.add(pa)
                    stack.append(pa)
        return out

    def topological_order(self):
        """Names in a topological order, or CycleError."""
        indeg = {v.name: 0 for v in self.variables}
        for a, b in self.edges:
            indeg[b] += 1
        queue = [nm for nm in self.names if indeg[nm] == 0]
        order = []
        while queue:
            nm = queue.pop(0)
            order.append(nm)
            for ch in self.children(nm):
                indeg[ch] -= 1
                if indeg[ch] == 0:
                    queue.append(ch)
        if len(order) != len(self.variables):
            stuck = sorted(nm for nm, d in indeg.items() if d > 0)
            raise CycleError(f"graph has a directed cycle through {stuck}")
        return order


@dataclass
class Finding:
    kind: str  # error class name or finding tag
    message: str
    hard: bool


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def add_hard(self, kind, message):
        self.findings.append(Finding(kind, message, True))

    def add_soft(self, kind, message):
        self.findings.append(Finding(kind, message, False))

    @property
    def hard_failures(self):
        return [f for f in self.findings if f.hard]

    @property
    def soft_findings(self):
        return [f for f in self.findings if not f.hard]

    @property
    def ok(self) -> bool:
        return not self.hard_failures

    @property
    def tightness_guaranteed(self) -> bool:
        return self.ok and not self.soft_findings

    def raise_first(self):
        """Raise the exception class named by the first hard failure."""
        if not self.hard_failures:
            return
        f = self.hard_failures[0]
        cls = _ERROR_CLASSES.get(f.kind, GraphError)
        raise cls(f.message)

    def lines(self):
        out = []
        for f in self.findings:
            tag = "error" if f.hard else "warning"
            out.append(f"{tag}: [{f.kind}] {f.message}")
        return out


_ERROR_CLASSES = {
    "CycleError": CycleError,
    "CrossSideEdgeError": CrossSideEdgeError,
    "CrossSideConfounderError": CrossSideConfounderError,
    "SideOrderingError": SideOrderingError,
    "UnobservedLeftVariableError": UnobservedLeftVariableError,
    "OutcomeOnLeftError": OutcomeOnLeftError,
    "LeftInterventionHasLeftChildError": LeftInterventionHasLeftChildError,
    "LeftNotAncestorOfInterventionError": LeftNotAncestorOfInterventionError,
    "ObservationWithLeftSideError": ObservationWithLeftSideError,
}


def validate_graph(g: CausalGraph) -> ValidationReport:
    """Check the structural requirements for a linear compilation.

    Hard failures (compilation refused): directed cycle, side ordering,
    a right-to-left edge, a confounder with children on both sides, an
    unobserved left variable.  Soft findings (bounds valid but not
    guaranteed tight): a nonempty side without one confounder covering
    the whole side.
    """
    report = ValidationReport()

    try:
        g.topological_order()
    except CycleError as e:
        report.add_hard("CycleError", str(e))

    # declaration order: all left variables precede all right variables
    last_left = max((i for i, v in enumerate(g.variables) if v.side == LEFT), default=-1)
    first_right = min((i for i, v in enumerate(g.variables) if v.side == RIGHT),
                      default=len(g.variables))
    if last_left > first_right:
        report.add_hard("SideOrderingError",
                        "left variables must be declared before right variables")

    for a, b in g.edges:
        if g.variable(a).side == RIGHT and g.variable(b).side == LEFT:
            report.add_hard("CrossSideEdgeError",
                            f"edge {a} -> {b} runs from the right side to the left side")

    for c in g.confounders:
        sides = {g.variable(nm).side for nm in c.children}
        if len(sides) > 1:
            report.add_hard("CrossSideConfounderError",
                            f"confounder {c.name} has children on both sides")

    for v in g.left:
        if not v.observed:
            report.add_hard("UnobservedLeftVariableError",
                            f"left variable {v.name} must be observed "
                            "(the bound conditions on the whole left side)")

    # side-wide confounders: required only for tightness, not validity
    for side, members in ((LEFT, g.left), (RIGHT, g.right)):
        if not members:
            continue
        names = {v.name for v in members}
        if not any(set(c.children) == names for c in g.confounders):
            report.add_soft("PartialConfounding",
                            f"no single confounder covers the whole {side} side; "
                            "bounds are valid but not guaranteed tight")

    return report


def _intervened_targets(event):
    """Set of variable names assigned a fixed value anywhere in a potential event."""
    out = set()

    def walk(term):
        for target, val in term.interventions:
            if hasattr(val, "interventions"):
                walk(val)
            else:
                out.add(target)

    if event.term is not None:
        walk(event.term)
    return out


def _left_value_leaks(g: CausalGraph, event) -> list[str]:
    """Left variables whose value the recursive evaluation of ``event`` would read.

    Walks the evaluation the same way the interventional recursion does,
    without response values: a fixed intervention entry stops descent,
    otherwise descent continues into the parents.  Any left variable
    reached this way influences the event, so the query is not a function
    of right-side response variables alone.
    """
    from .querylang import build_intervention_matrix

    if event.term is None:
        return []
    matrix = build_intervention_matrix(event.term, g)
    leaks = []
    seen = set()

    def walk(var, path):
        if (var, path) in seen:
            return
        seen.add((var, path))
        if matrix.entry(var, path) is not None:
            return
        if g.variable(var).side == LEFT:
            if var not in leaks:
                leaks.append(var)
            return
        for pa in g.parents(var):
            walk(pa, (pa,) + path)

    walk(event.term.variable, (event.term.variable,))
    return leaks


def validate_query_against_graph(g: CausalGraph, q) -> ValidationReport:
    """Check that a query is compilable on ``g``.

    Every outcome must live on the right side.  When the left side is
    nonempty: intervened left variables may not have left children, no
    factual events are allowed, and no left variable's value may reach
    the recursive evaluation of any potential outcome (every path from
    the left side into an outcome must be cut by an intervention).
    """
    report = ValidationReport()
    has_left = g.left_count > 0

    for _, atomic in q.terms:
        for ev in atomic.events:
            if g.variable(ev.variable).side == LEFT:
                report.add_hard("OutcomeOnLeftError",
                                f"outcome variable {ev.variable} is on the left side")
        if not has_left:
            continue
        for ev in atomic.events:
            if ev.term is None:
                report.add_hard("ObservationWithLeftSideError",
                                f"factual event on {ev.variable} is not allowed "
                                "when the left side is nonempty")
                continue
            for target in _intervened_targets(ev):
                tv = g.variable(target)
                if tv.side == LEFT:
                    left_children = [c for c in g.children(target)
                                     if g.variable(c).side == LEFT]
                    if left_children:
                        report.add_hard(
                            "LeftInterventionHasLeftChildError",
                            f"intervened left variable {target} has left "
                            f"children {left_children}")
            if g.variable(ev.variable).side == LEFT:
                continue  # already reported above
            leaks = _left_value_leaks(g, ev)
            if leaks:
                report.add_hard(
                    "LeftNotAncestorOfInterventionError",
                    f"left variable(s) {leaks} can influence the outcome "
                    f"{ev.variable} along a path not cut by the intervention set")
    return report


@dataclass
class LintReport:
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.warnings


def informativeness_lint(g: CausalGraph, q) -> LintReport:
    """Warn when no outcome of the query, nor any descendant of one, is observed.

    In that situation the data cannot separate the outcome's counterfactual
    probabilities and the emitted bounds will be vacuous unless user
    constraints supply extra information.
    """
    report = LintReport()
    outcome_vars = {ev.variable for _, atomic in q.terms for ev in atomic.events}
    reachable = set()
    for nm in outcome_vars:
        reachable.add(nm)
        reachable |= g.descendants(nm)
    if not any(g.variable(nm).observed for nm in reachable):
        report.warnings.append(
            "no outcome variable and no descendant of an outcome is observed; "
            "the bounds will be vacuous without additional constraints")
    return report


# -- graph DSL ----------------------------------------------------------
#
#   var X : 3                 right side by default
#   var Z : 2 left
#   var Y : 2 right unobserved
#   edge Z -> X
#   confound U { X, Y }       latent U with the listed children
#   confound left             one latent spanning the whole left side
#   confound right            one latent spanning the whole right side
#   unobserved Y
#   # comment

def parse_graph(text: str) -> CausalGraph:
    variables: list[dict] = []
    edges = []
    confounders = []
    pending_side_confounds = []

    def var_entry(name):
        for entry in variables:
            if entry["name"] == name:
                return entry
        return None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.replace("{", " { ").replace("}", " } ").replace(",", " ").split()
        head = tokens[0]
        if head == "var":
            rest = " ".join(tokens[1:])
            if ":" not in rest:
                raise GraphSyntaxError("expected 'var NAME : CARD [left|right] [unobserved]'",
                                       lineno)
            name_part, card_part = rest.split(":", 1)
            name = name_part.strip()
            card_tokens = card_part.split()
            if not name or not card_tokens:
                raise GraphSyntaxError("malformed var declaration", lineno)
            try:
                card = int(card_tokens[0])
            except ValueError:
                raise GraphSyntaxError(f"cardinality {card_tokens[0]!r} is not an integer",
                                       lineno) from None
            side = RIGHT
            observed = True
            for tok in card_tokens[1:]:
                if tok in (LEFT, RIGHT):
                    side = tok
                elif tok == "unobserved":
                    observed = False
                else:
                    raise GraphSyntaxError(f"unexpected token {tok!r}", lineno)
            if var_entry(name):
                raise GraphSyntaxError(f"variable {name!r} declared twice", lineno)
            variables.append({"name": name, "card": card, "side": side,
                              "observed": observed})
        elif head == "edge":
            if len(tokens) != 4 or tokens[2] != "->":
                raise GraphSyntaxError("expected 'edge A -> B'", lineno)
            edges.append((tokens[1], tokens[3]))
        elif head == "confound":
            if len(tokens) == 2 and tokens[1] in (LEFT, RIGHT):
                pending_side_confounds.append((tokens[1], lineno))
            else:
                if len(tokens) < 4 or tokens[2] != "{" or tokens[-1] != "}":
                    raise GraphSyntaxError(
                        "expected 'confound NAME { A, B, ... }' or 'confound left|right'",
                        lineno)
                confounders.append(Confounder(tokens[1], tuple(tokens[3:-1])))
        elif head == "unobserved":
            if len(tokens) != 2:
                raise GraphSyntaxError("expected 'unobserved NAME'", lineno)
            entry = var_entry(tokens[1])
            if entry is None:
                raise GraphSyntaxError(f"unknown variable {tokens[1]!r}", lineno)
            entry["observed"] = False
        else:
            raise GraphSyntaxError(f"unknown directive {head!r}", lineno)

    var_objs = tuple(Variable(e["name"], e["card"], e["side"], e["observed"])
                     for e in variables)
    for side, lineno in pending_side_confounds:
        members = tuple(e["name"] for e in variables if e["side"] == side)
        if not members:
            raise GraphSyntaxError(f"'confound {side}': that side is empty", lineno)
        confounders.append(Confounder(f"U_{side}", members))
    return CausalGraph(var_objs, tuple(edges), tuple(confounders))
