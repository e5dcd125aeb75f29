"""Canonical response-function variables and their tables.

Every variable W gets a categorical response variable indexing the
functions from parent assignments to values of W.  The integer encodings
fixed here are load-bearing for everything downstream:

* parent assignments are enumerated in mixed radix with the first-declared
  parent as the fastest-varying digit;
* a response index, written in base card(W), has the output for the k-th
  parent assignment as its k-th digit;
* the joint right-side response index enumerates variables in declaration
  order with the first-declared variable slowest-varying.

Pointwise counterfactual constraints of the shape ``V(P=a) >= V(P=b)``
(almost-sure monotonicity and friends) are compiled here into removed
response rows; everything else stays for the LP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .model import CausalGraph, Variable

DEFAULT_ROW_CAP = 2 ** 24


class EmptyResponseSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class PointwiseConstraint:
    """Almost-sure comparison ``variable(lhs_args) REL variable(rhs_args)``.

    The args partially assign parents of ``variable``; unassigned parents
    range over all completions.  Functional in the variable's own response
    row, so it compiles to row exclusions rather than LP rows.
    """

    variable: str
    lhs_args: tuple[tuple[str, int], ...]
    rhs_args: tuple[tuple[str, int], ...]
    relation: str  # '>=', '<=' or '='

    def render(self) -> str:
        def side(args):
            inner = ", ".join(f"{k}={v}" for k, v in args)
            return f"{self.variable}({inner})"
        return f"{side(self.lhs_args)} {self.relation} {side(self.rhs_args)}"


@dataclass(frozen=True)
class ResponseFunctionTable:
    """All functions from parent assignments to values, indexed canonically."""

    variable: Variable
    parent_order: tuple[Variable, ...]
    n_rows: int

    @property
    def n_parent_assignments(self) -> int:
        n = 1
        for p in self.parent_order:
            n *= p.cardinality
        return n

    def assignment_index(self, assignment) -> int:
        """Mixed-radix index of a parent assignment (first parent fastest)."""
        idx = 0
        radix = 1
        for p in self.parent_order:
            val = assignment[p.name]
            if not 0 <= val < p.cardinality:
                raise ValueError(f"value {val} out of range for {p.name}")
            idx += val * radix
            radix *= p.cardinality
        return idx

    def assignment_from_index(self, k: int) -> dict:
        out = {}
        for p in self.parent_order:
            out[p.name] = k % p.cardinality
            k //= p.cardinality
        return out

    def value(self, response_index: int, assignment) -> int:
        """Output of response function ``response_index`` at ``assignment``."""
        k = self.assignment_index(assignment)
        c = self.variable.cardinality
        return (response_index // c ** k) % c

    def row_outputs(self, response_index: int) -> tuple[int, ...]:
        c = self.variable.cardinality
        return tuple((response_index // c ** k) % c
                     for k in range(self.n_parent_assignments))

    def response_index_of(self, outputs) -> int:
        c = self.variable.cardinality
        return sum(v * c ** k for k, v in enumerate(outputs))

    def rows_tsv(self) -> str:
        """Debug dump: rowIndex, parentAssignment, value triples."""
        lines = []
        for r in range(self.n_rows):
            for k in range(self.n_parent_assignments):
                a = self.assignment_from_index(k)
                akey = ",".join(f"{p.name}={a[p.name]}" for p in self.parent_order) or "-"
                lines.append(f"{r}\t{akey}\t{self.value(r, a)}")
        return "\n".join(lines)


def enumerate_response_table(v: Variable, parents, row_cap: int = DEFAULT_ROW_CAP
                             ) -> ResponseFunctionTable:
    """Table with card(v) ** (product of parent cardinalities) rows."""
    n_assign = 1
    for p in parents:
        n_assign *= p.cardinality
    n_rows = v.cardinality ** n_assign
    if n_rows > row_cap:
        raise OverflowError(
            f"response table for {v.name} needs {n_rows} rows "
            f"(cap {row_cap}); the discretization is intractable")
    return ResponseFunctionTable(v, tuple(parents), n_rows)


@dataclass(frozen=True)
class ResponseSpace:
    """Joint right-side response index space, after user exclusions."""

    graph: CausalGraph
    tables: dict[str, ResponseFunctionTable] = field(compare=False)
    allowed_rows: dict[str, tuple[int, ...]] = field(compare=False)
    exclusions: tuple[tuple[str, int], ...] = ()

    @property
    def right_names(self):
        return [v.name for v in self.graph.right]

    @property
    def aleph(self) -> int:
        n = 1
        for nm in self.right_names:
            n *= len(self.allowed_rows[nm])
        return n

    def response_vector(self, gamma: int) -> dict[str, int]:
        """gamma -> {right var: original response row}, first-declared slowest."""
        names = self.right_names
        out = {}
        for nm in reversed(names):
            rows = self.allowed_rows[nm]
            out[nm] = rows[gamma % len(rows)]
            gamma //= len(rows)
        if gamma:
            raise IndexError("gamma out of range")
        return out

    def gamma_of(self, assignment) -> int:
        gamma = 0
        for nm in self.right_names:
            rows = self.allowed_rows[nm]
            gamma = gamma * len(rows) + rows.index(assignment[nm])
        return gamma

    def iter_vectors(self):
        for gamma in range(self.aleph):
            yield gamma, self.response_vector(gamma)

    def label(self, gamma: int) -> str:
        """q-index label like 'q_{0,5}' using original row indices."""
        vec = self.response_vector(gamma)
        return "q_{" + ",".join(str(vec[nm]) for nm in self.right_names) + "}"


def _violates(table: ResponseFunctionTable, c: PointwiseConstraint, row: int) -> bool:
    fixed_lhs = dict(c.lhs_args)
    fixed_rhs = dict(c.rhs_args)
    # assigned parents take their stated values per side; the rest range
    # over all completions, shared between the two sides.
    free_names = [p.name for p in table.parent_order]
    ranges = [range(p.cardinality) for p in table.parent_order]
    for combo in product(*ranges):
        base = dict(zip(free_names, combo))
        lhs_assign = {**base, **fixed_lhs}
        rhs_assign = {**base, **fixed_rhs}
        lv = table.value(row, lhs_assign)
        rv = table.value(row, rhs_assign)
        if c.relation == ">=" and lv < rv:
            return True
        if c.relation == "<=" and lv > rv:
            return True
        if c.relation == "=" and lv != rv:
            return True
    return False


def build_response_space(g: CausalGraph, constraints=(), row_cap: int = DEFAULT_ROW_CAP
                         ) -> ResponseSpace:
    """Tables for every variable plus exclusions from pointwise constraints."""
    tables = {}
    for v in g.variables:
        parents = [g.variable(nm) for nm in g.parents(v.name)]
        tables[v.name] = enumerate_response_table(v, parents, row_cap)

    allowed = {v.name: list(range(tables[v.name].n_rows)) for v in g.variables}
    exclusions = []
    for c in constraints:
        if not isinstance(c, PointwiseConstraint):
            raise TypeError(f"expected PointwiseConstraint, got {type(c).__name__}")
        table = tables[c.variable]
        parent_names = {p.name for p in table.parent_order}
        for args in (c.lhs_args, c.rhs_args):
            for nm, val in args:
                if nm not in parent_names:
                    raise ValueError(
                        f"constraint {c.render()}: {nm} is not a parent of {c.variable}")
                if not 0 <= val < g.variable(nm).cardinality:
                    raise ValueError(f"constraint {c.render()}: value {val} out of range")
        keep = []
        for row in allowed[c.variable]:
            if _violates(table, c, row):
                exclusions.append((c.variable, row))
            else:
                keep.append(row)
        if not keep:
            raise EmptyResponseSpaceError(
                f"constraint {c.render()} removes every response row of {c.variable}")
        allowed[c.variable] = keep

    return ResponseSpace(g, tables,
                         {nm: tuple(rows) for nm, rows in allowed.items()},
                         tuple(exclusions))
