# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Concrete syntax for hy-tccp programs (``.hyt`` files).

::

    program    := statement*
    statement  := "cvar" vars "." | NAME ["(" [vars] ")"] ":-" agent "."
    agent      := sum ("||" sum)*
    sum        := unit ("+" unit)*         (several units must all be branches)
    unit       := "ask" "(" constraint ")" "->" primary | "cask" "(" constraint ")"
                | primary
    primary    := "stop" | "tell" "(" constraint ")"
                | "now" constraint "then" primary "else" primary
                | "exists" vars "(" agent ")"
                | "change" "(" VAR "," (number | "_") "," (number | "_") ")"
                | NAME ["(" [vars] ")"] | "(" agent ")"
    constraint := "true" | atom ("/\\" atom)*

Variables start with an upper-case letter or ``_``; a bare ``_`` is a fresh
anonymous variable. Lower-case names are process names, symbols and
signals. ``%`` starts a comment.
"""
import itertools
import logging
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .constraints import Cell
from .constraints import Constraint
from .constraints import Eq
from .constraints import Neq
from .constraints import NIL
from .constraints import Num
from .constraints import Signal
from .constraints import Sym
from .constraints import term_variables
from .constraints import Var
from .exceptions import ArityMismatch
from .exceptions import EmptyChoice
from .exceptions import HytSyntaxError
from .exceptions import KindClash
from .exceptions import UnboundProcess
from .lang import Branch
from .lang import Call
from .lang import Change
from .lang import Choice
from .lang import Declaration
from .lang import Hide
from .lang import KEEP
from .lang import Now
from .lang import Parallel
from .lang import Program
from .lang import STOP
from .lang import Tell
from .linear import Linear

logger = logging.getLogger(__name__)

KEYWORDS = frozenset(
    ["stop", "tell", "now", "then", "else", "exists", "change"]
    + ["ask", "cask", "true", "cvar"]
)
RELATIONS = {
    "=": "=",
    "!=": "!=",
    "<": "<",
    "<=": "<=",
    "=<": "<=",
    ">": ">",
    ">=": ">=",
}

_TOKEN = re.compile(
    r"""
    (?P<comment>%[^\n]*)
  | (?P<space>[ \t\r\n]+)
  | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<var>[A-Z_][A-Za-z0-9_'\#]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<op>:-|\|\||/\\|->|!=|<=|>=|=<|[=<>()\[\]|,.+\-*])
    """,
    re.VERBOSE,
)
_NUMBERED_ANONYMOUS = re.compile(r"_(\d+)")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source, path=None):
    tokens = []
    line, line_start, position = 1, 0, 0
    while position < len(source):
        match = _TOKEN.match(source, position)
        if match is None:
            raise HytSyntaxError(
                f"unexpected character {source[position]!r}",
                line,
                position - line_start + 1,
                path,
            )
        kind = match.lastgroup
        text = match.group()
        if kind not in ("comment", "space"):
            if kind == "name" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, position - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = position + text.rindex("\n") + 1
        position = match.end()
    tokens.append(Token("eof", "", line, position - line_start + 1))
    return tokens


def _number(text):
    if "/" in text:
        numerator, denominator = text.split("/")
        return Fraction(int(numerator), int(denominator))
    return Fraction(text)


class Parser:
    def __init__(self, source, path=None):
        self.path = path
        self.tokens = deque(tokenize(source, path))
        taken = [
            int(m.group(1))
            for t in self.tokens
            if t.kind == "var" and (m := _NUMBERED_ANONYMOUS.fullmatch(t.text))
        ]
        self._anonymous = itertools.count(max(taken, default=0) + 1)
        self.calls = []

    # token helpers

    @property
    def current(self):
        return self.tokens[0]

    def peek(self, offset=1):
        if offset < len(self.tokens):
            return self.tokens[offset]
        return self.tokens[-1]

    def error(self, message, token=None):
        token = token or self.current
        return HytSyntaxError(message, token.line, token.column, self.path)

    def at(self, text):
        return self.current.text == text and self.current.kind in ("op", "keyword")

    def expect(self, text):
        if not self.at(text):
            found = self.current.text or "end of input"
            raise self.error(f"expected {text!r} but found {found!r}")
        return self.tokens.popleft()

    def accept(self, text):
        if self.at(text):
            return self.tokens.popleft()
        return None

    def expect_kind(self, kind, what):
        if self.current.kind != kind:
            found = self.current.text or "end of input"
            raise self.error(f"expected {what} but found {found!r}")
        return self.tokens.popleft()

    # programs

    def parse_program(self):
        declarations = []
        continuous = set()
        locations = {}
        while self.current.kind != "eof":
            if self.accept("cvar"):
                continuous.update(v.name for v in self.parse_vars())
                self.expect(".")
                continue
            token = self.current
            declaration = self.parse_declaration()
            if declaration.name in locations:
                raise self.error(f"duplicate declaration of {declaration.name}", token)
            locations[declaration.name] = token
            declarations.append(declaration)
        program = Program(tuple(declarations), Call("init"), frozenset(continuous))
        check_program(program, self.calls, locations, self.path)
        return classify(program, locations, self.path)

    def parse_declaration(self):
        name = self.expect_kind("name", "a declaration name")
        params = ()
        if self.accept("("):
            if not self.at(")"):
                params = tuple(self.parse_vars())
            self.expect(")")
        seen = set()
        for param in params:
            if param.name in seen:
                raise self.error(f"parameter {param.name} repeated", name)
            seen.add(param.name)
        self.expect(":-")
        body = self.parse_agent()
        self.expect(".")
        return Declaration(name.text, params, body)

    def parse_vars(self):
        names = [self.parse_var()]
        while self.accept(","):
            names.append(self.parse_var())
        return names

    def parse_var(self):
        token = self.expect_kind("var", "a variable")
        if token.text == "_":
            return Var(f"_{next(self._anonymous)}")
        return Var(token.text)

    # agents

    def parse_agent(self):
        agent = self.parse_sum()
        while self.accept("||"):
            agent = Parallel(agent, self.parse_sum())
        return agent

    def parse_sum(self):
        start = self.current
        units = [self.parse_unit()]
        while self.accept("+"):
            units.append(self.parse_unit())
        if len(units) == 1 and not isinstance(units[0], (Branch, Constraint)):
            return units[0]
        if not all(isinstance(u, (Branch, Constraint)) for u in units):
            raise self.error("only ask and cask branches can be joined by '+'", start)
        return Choice(
            tuple(u for u in units if isinstance(u, Branch)),
            tuple(u for u in units if isinstance(u, Constraint)),
        )

    def parse_unit(self):
        if self.accept("ask"):
            self.expect("(")
            guard = self.parse_constraint()
            self.expect(")")
            self.expect("->")
            return Branch(guard, self.parse_primary())
        if self.accept("cask"):
            self.expect("(")
            invariant = self.parse_constraint()
            self.expect(")")
            return invariant
        return self.parse_primary()

    def parse_primary(self):
        token = self.current
        if self.accept("stop"):
            return STOP
        if self.accept("tell"):
            self.expect("(")
            constraint = self.parse_constraint()
            self.expect(")")
            return Tell(constraint)
        if self.accept("now"):
            cond = self.parse_constraint()
            self.expect("then")
            then = self.parse_primary()
            self.expect("else")
            return Now(cond, then, self.parse_primary())
        if self.accept("exists"):
            variables = tuple(self.parse_vars())
            self.expect("(")
            body = self.parse_agent()
            self.expect(")")
            return Hide(variables, body)
        if self.accept("change"):
            self.expect("(")
            var = self.expect_kind("var", "a continuous variable")
            if var.text == "_":
                raise self.error("change needs a named variable", var)
            self.expect(",")
            value = self.parse_setting()
            self.expect(",")
            flow = self.parse_setting()
            self.expect(")")
            return Change(Var(var.text, continuous=True), value, flow)
        if self.accept("("):
            agent = self.parse_agent()
            self.expect(")")
            return agent
        if token.kind == "name":
            self.tokens.popleft()
            args = ()
            if self.accept("("):
                if not self.at(")"):
                    args = tuple(self.parse_vars())
                self.expect(")")
            call = Call(token.text, args)
            self.calls.append((call, token))
            return call
        raise self.error(f"expected an agent but found {token.text or 'end of input'!r}")

    def parse_setting(self):
        if self.current.kind == "var" and self.current.text == "_":
            self.tokens.popleft()
            return KEEP
        sign = -1 if self.accept("-") else 1
        if sign == 1:
            self.accept("+")
        return sign * _number(self.expect_kind("number", "a number or '_'").text)

    # constraints

    def parse_constraint(self):
        if self.accept("true"):
            atoms = []
        else:
            atoms = [self.parse_atom()]
        while self.accept("/\\"):
            if not self.accept("true"):
                atoms.append(self.parse_atom())
        return Constraint.of(atoms)

    def parse_atom(self):
        token = self.current
        if token.kind == "name" and self.peek().text not in RELATIONS:
            self.tokens.popleft()
            return Signal(token.text)
        left = self.parse_side()
        relation = self.current
        if relation.text not in RELATIONS or relation.kind != "op":
            raise self.error("expected a relation", relation)
        self.tokens.popleft()
        op = RELATIONS[relation.text]
        right = self.parse_side()
        return self.build_atom(left, op, right, token)

    def build_atom(self, left, op, right, token):
        if op in ("=", "!=") and _is_term(left) and _is_term(right):
            return (Eq if op == "=" else Neq)(_as_term(left), _as_term(right))
        if op == "!=":
            raise self.error("disequations relate terms, not arithmetic", token)
        if not (_is_numeric(left) and _is_numeric(right)):
            raise self.error("arithmetic relation over a non-numeric term", token)
        left_terms, left_constant = _as_sum(left)
        right_terms, right_constant = _as_sum(right)
        terms = dict(left_terms)
        for name, c in right_terms.items():
            terms[name] = terms.get(name, 0) - c
        return Linear.make(terms, op, right_constant - left_constant)

    def parse_side(self):
        if self.at("[") or self.current.kind == "name":
            return self.parse_term()
        return self.parse_sum_expression()

    def parse_term(self):
        token = self.current
        if token.kind == "name":
            self.tokens.popleft()
            return Sym(token.text)
        if token.kind == "var":
            return self.parse_var()
        if self.accept("["):
            if self.accept("]"):
                return NIL
            items = [self.parse_term()]
            while self.accept(","):
                items.append(self.parse_term())
            tail = self.parse_term() if self.accept("|") else NIL
            self.expect("]")
            for item in reversed(items):
                tail = Cell(item, tail)
            return tail
        sign = -1 if self.accept("-") else 1
        if sign == 1:
            self.accept("+")
        return Num(sign * _number(self.expect_kind("number", "a term").text))

    def parse_sum_expression(self):
        terms, constant = {}, Fraction(0)
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        while True:
            if self.current.kind == "number":
                value = sign * _number(self.tokens.popleft().text)
                if self.accept("*"):
                    var = self.parse_var()
                    terms[var.name] = terms.get(var.name, 0) + value
                else:
                    constant += value
            else:
                var = self.parse_var()
                terms[var.name] = terms.get(var.name, 0) + sign
            if self.accept("+"):
                sign = 1
            elif self.accept("-"):
                sign = -1
            else:
                return ("sum", terms, constant)


def _is_term(side):
    if isinstance(side, tuple):
        terms, constant = side[1], side[2]
        single = len(terms) == 1 and next(iter(terms.values())) == 1
        return (single and constant == 0) or not terms
    return True


def _as_term(side):
    if not isinstance(side, tuple):
        return side
    terms, constant = side[1], side[2]
    if terms:
        return Var(next(iter(terms)))
    return Num(constant)


def _is_numeric(side):
    return isinstance(side, (tuple, Var, Num))


def _as_sum(side):
    if isinstance(side, tuple):
        return side[1], side[2]
    if isinstance(side, Var):
        return {side.name: Fraction(1)}, Fraction(0)
    return {}, side.value


def _walk(agent):
    yield agent
    if isinstance(agent, Parallel):
        yield from _walk(agent.left)
        yield from _walk(agent.right)
    elif isinstance(agent, Now):
        yield from _walk(agent.then)
        yield from _walk(agent.orelse)
    elif isinstance(agent, Hide):
        yield from _walk(agent.body)
    elif isinstance(agent, Choice):
        for branch in agent.asks:
            yield from _walk(branch.body)


def check_program(program, calls=(), locations=None, path=None):
    """Reject unresolved calls, arity mismatches and empty choices."""
    locations = locations or {}
    arity = {d.name: d.arity for d in program.declarations}
    located = {id(call): token for call, token in calls}
    for declaration in program.declarations:
        for agent in _walk(declaration.body):
            if isinstance(agent, Choice) and not (agent.asks or agent.casks):
                raise EmptyChoice(f"empty choice in {declaration.signature}", source=path)
            if not isinstance(agent, Call):
                continue
            token = located.get(id(agent)) or locations.get(declaration.name)
            line = token.line if token else None
            column = token.column if token else None
            if agent.name not in arity:
                raise UnboundProcess(
                    f"no declaration for {agent.name}/{len(agent.args)}",
                    line,
                    column,
                    path,
                )
            if arity[agent.name] != len(agent.args):
                raise ArityMismatch(
                    f"{agent.name} takes {arity[agent.name]} arguments,"
                    f" called with {len(agent.args)}",
                    line,
                    column,
                    path,
                )


def _structural_names(constraint):
    """Variables used as stream or symbol values inside a constraint."""
    names = set()
    for atom in constraint.atoms:
        if not isinstance(atom, (Eq, Neq)):
            continue
        sides = (atom.left, atom.right)
        if any(isinstance(t, (Cell, Sym)) or t == NIL for t in sides):
            for side in sides:
                names |= term_variables(side)
    return names


def _kind_usage(body):
    continuous, structural, calls = set(), set(), []
    for agent in _walk(body):
        if isinstance(agent, Change):
            continuous.add(agent.var.name)
        elif isinstance(agent, Call):
            calls.append(agent)
        elif isinstance(agent, Tell):
            structural |= _structural_names(agent.constraint)
        elif isinstance(agent, Now):
            structural |= _structural_names(agent.cond)
        elif isinstance(agent, Choice):
            for branch in agent.asks:
                structural |= _structural_names(branch.guard)
            for invariant in agent.casks:
                structural |= _structural_names(invariant)
    return continuous, structural, calls


def classify(program, locations=None, path=None):
    """Infer which variables are continuous and mark them on the AST."""
    locations = locations or {}
    usage = {d.name: _kind_usage(d.body) for d in program.declarations}
    kinds = {
        name: set(continuous) | set(program.continuous)
        for name, (continuous, _, _) in usage.items()
    }
    params = {d.name: d.params for d in program.declarations}
    changed = True
    while changed:
        changed = False
        for name, (_, _, calls) in usage.items():
            for call in calls:
                for param, arg in zip(params[call.name], call.args):
                    if param.name in kinds[call.name] and arg.name not in kinds[name]:
                        kinds[name].add(arg.name)
                        changed = True
                    if arg.name in kinds[name] and param.name not in kinds[call.name]:
                        kinds[call.name].add(param.name)
                        changed = True
    declarations = []
    for declaration in program.declarations:
        continuous = kinds[declaration.name]
        clash = continuous & usage[declaration.name][1]
        if clash:
            token = locations.get(declaration.name)
            raise KindClash(
                f"{', '.join(sorted(clash))} used both as a continuous variable"
                " and as a stream or symbol",
                token.line if token else None,
                token.column if token else None,
                path,
            )
        declarations.append(
            Declaration(
                declaration.name,
                _mark_vars(declaration.params, continuous),
                mark(declaration.body, continuous),
            )
        )
    logger.debug("continuous variables per declaration: %s", kinds)
    return Program(tuple(declarations), program.entry, program.continuous, path)


def _mark_vars(variables, continuous):
    return tuple(Var(v.name, v.name in continuous) for v in variables)


def mark(agent, continuous):
    """Set the continuous flag on the variables of calls, changes and scopes."""
    if isinstance(agent, Parallel):
        return Parallel(mark(agent.left, continuous), mark(agent.right, continuous))
    if isinstance(agent, Now):
        return Now(
            agent.cond, mark(agent.then, continuous), mark(agent.orelse, continuous)
        )
    if isinstance(agent, Hide):
        return Hide(
            _mark_vars(agent.variables, continuous),
            mark(agent.body, continuous),
            agent.local,
            agent.opened,
        )
    if isinstance(agent, Call):
        return Call(agent.name, _mark_vars(agent.args, continuous))
    if isinstance(agent, Choice):
        return Choice(
            tuple(Branch(b.guard, mark(b.body, continuous)) for b in agent.asks),
            agent.casks,
        )
    return agent


def parse(source, path=None):
    """Parse a whole program; ``path`` only decorates error messages."""
    return Parser(source, path).parse_program()


def parse_file(path):
    with open(path, encoding="utf-8") as f:
        return parse(f.read(), str(path))


def parse_agent(text, program=None):
    """Parse a single agent, e.g. an entry point given on the command line."""
    parser = Parser(text)
    agent = parser.parse_agent()
    parser.expect_kind("eof", "end of input")
    if program is not None:
        check_program(
            Program(program.declarations + (Declaration("", (), agent),)),
            parser.calls,
        )
        continuous, _, _ = _kind_usage(agent)
        agent = mark(agent, continuous | set(program.continuous))
    return agent


def parse_constraint(text):
    parser = Parser(text)
    constraint = parser.parse_constraint()
    parser.expect_kind("eof", "end of input")
    return constraint
