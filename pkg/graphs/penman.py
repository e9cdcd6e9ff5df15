"""
PENMAN notation reader and writer for AMR graphs.

    (w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))

Every `var / concept` declaration becomes a node, every `:role` attachment an
edge from the enclosing node, and a bare variable a re-entrant edge into the
node it names. An inverse role `:ROLE-of` becomes a `:ROLE` edge pointing back
at the enclosing node. Quoted strings, numbers, the polarity symbols `-`/`+`
and undeclared bare symbols that are not variable-shaped (`imperative`) become
constant leaf nodes. Alignment markers such as `~e.10,12` are dropped.
"""
import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from utils.errors import ParseError, SerializeError, UsageError

logger = logging.getLogger("LDGCN")

_ALIGNMENT = re.compile(r"~[A-Za-z]*\.?[0-9]+(?:,[0-9]+)*")
_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_POLARITY = ("-", "+")
# variables are a letter plus optional digits; other undeclared bare symbols are constants
_VARIABLE = re.compile(r"^[A-Za-z][0-9]*$")
# roles that end in -of without being inverse roles
_OF_ROLES = frozenset({"consist-of", "prep-on-behalf-of", "prep-out-of"})
_DELIMITERS = set('()/" \t\r\n')


def is_inverse_role(role: str) -> bool:
    """`ARG0-of` is the inverse of `ARG0`; `consist-of` is a plain role."""
    return role.endswith("-of") and role not in _OF_ROLES


def _inverted(role: str) -> Optional[str]:
    """The role text that attaches an edge from its target's side, if one parses back."""
    text = f"{role}-of"
    return text if is_inverse_role(text) else None


@dataclass(frozen=True)
class AmrNode:
    variable: str
    concept: str
    constant: bool = False


@dataclass(frozen=True)
class AmrEdge:
    source: int
    target: int
    role: str


@dataclass(frozen=True)
class AmrGraph:
    """A rooted, labeled, directed graph; immutable once built."""

    nodes: Tuple[AmrNode, ...]
    edges: Tuple[AmrEdge, ...]
    root: int = 0

    def __post_init__(self):
        n = len(self.nodes)
        if n == 0:
            raise UsageError("an AMR graph needs at least one node")
        if not 0 <= self.root < n:
            raise UsageError(f"root {self.root} outside [0, {n})")
        variables = [node.variable for node in self.nodes]
        if len(set(variables)) != n:
            dupes = sorted(v for v, c in Counter(variables).items() if c > 1)
            raise UsageError(f"duplicate variables {dupes}")
        for e in self.edges:
            if not (0 <= e.source < n and 0 <= e.target < n):
                raise UsageError(f"edge {e} references a node outside [0, {n})")
            if self.nodes[e.source].constant:
                raise UsageError(f"constant node {self.nodes[e.source].concept!r} has an outgoing edge")
            if is_inverse_role(e.role) and not self.nodes[e.target].constant:
                raise UsageError(f"inverse role :{e.role} must be stored as :{e.role[:-3]} from {e.target} to {e.source}")
        indegree = Counter(e.target for e in self.edges)
        for i, node in enumerate(self.nodes):
            if node.constant and (indegree[i] != 1 or i == self.root):
                raise UsageError(f"constant {node.concept!r} must be a leaf with exactly one parent")
        if n > 1:
            src = [e.source for e in self.edges]
            dst = [e.target for e in self.edges]
            links = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
            count, _ = connected_components(links, directed=False)
            if count != 1:
                raise UsageError(f"graph is not connected ({count} components)")

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def concepts(self) -> List[str]:
        return [node.concept for node in self.nodes]

    def index_of(self, variable: str) -> int:
        for i, node in enumerate(self.nodes):
            if node.variable == variable:
                return i
        raise KeyError(variable)

    def reentrant_variables(self) -> List[str]:
        """Variables of nodes with more than one incoming edge, in node order."""
        indegree = Counter(e.target for e in self.edges)
        return [node.variable for i, node in enumerate(self.nodes) if indegree[i] > 1]

    def reentrancies(self) -> int:
        """Number of incoming edges beyond the first, summed over nodes."""
        indegree = Counter(e.target for e in self.edges)
        return sum(c - 1 for c in indegree.values() if c > 1)

    def permuted(self, order: Sequence[int]) -> "AmrGraph":
        """Relabels node i as order[i]; the graph structure is unchanged."""
        if sorted(order) != list(range(self.n)):
            raise UsageError("order must be a permutation of the node indices")
        nodes = [None] * self.n
        for old, new in enumerate(order):
            nodes[new] = self.nodes[old]
        edges = tuple(AmrEdge(order[e.source], order[e.target], e.role) for e in self.edges)
        return AmrGraph(tuple(nodes), edges, order[self.root])


class _Token(NamedTuple):
    kind: str  # "(", ")", "/", "role", "string", "symbol"
    text: str
    pos: int  # character index


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> Iterator[_Token]:
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()/":
            yield _Token(ch, ch, i)
            i += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            if j >= n:
                raise ParseError("unterminated string", _byte_offset(text, i))
            value = text[i:j + 1]
            j += 1
            m = _ALIGNMENT.match(text, j)
            if m:
                j = m.end()
            yield _Token("string", value, i)
            i = j
        else:
            j = i
            while j < n and text[j] not in _DELIMITERS:
                j += 1
            raw = _ALIGNMENT.sub("", text[i:j])
            if raw.startswith(":"):
                if len(raw) == 1:
                    raise ParseError("empty role name", _byte_offset(text, i))
                yield _Token("role", raw[1:], i)
            else:
                yield _Token("symbol", raw, i)
            i = j


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.pos = 0
        self.nodes: List[AmrNode] = []
        self.var_index = {}
        # references may precede the declaration they point at
        self.declared = {
            tok.text
            for prev, tok, nxt in zip(self.tokens, self.tokens[1:], self.tokens[2:])
            if prev.kind == "(" and tok.kind == "symbol" and nxt.kind == "/"
        }
        # (source, target index or None, role, pending variable, char pos)
        self.edges: List[Optional[Tuple[int, Optional[int], str, Optional[str], int]]] = []

    def error(self, message: str, pos: Optional[int] = None) -> ParseError:
        if pos is None:
            pos = self.tokens[self.pos].pos if self.pos < len(self.tokens) else len(self.text)
        return ParseError(message, _byte_offset(self.text, pos))

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            if kind == ")":
                raise self.error("unbalanced parentheses: missing ')'")
            raise self.error(f"unexpected end of input, expected {what}")
        if tok.kind != kind:
            raise self.error(f"expected {what}, found {tok.text!r}")
        self.pos += 1
        return tok

    def add_node(self, node: AmrNode) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def add_constant(self, value: str) -> int:
        return self.add_node(AmrNode(f"_c{len(self.nodes)}", value, constant=True))

    def is_constant(self, symbol: str) -> bool:
        if _NUMBER.match(symbol) or symbol in _POLARITY:
            return True
        return symbol not in self.declared and not _VARIABLE.match(symbol)

    def parse_node(self) -> int:
        self.take("(", "'('")
        var_tok = self.take("symbol", "a variable")
        self.take("/", "'/'")
        concept_tok = self.peek()
        if concept_tok is None or concept_tok.kind not in ("symbol", "string"):
            raise self.error("expected a concept")
        self.pos += 1
        if var_tok.text in self.var_index:
            raise self.error(f"duplicate variable {var_tok.text!r}", var_tok.pos)
        index = self.add_node(AmrNode(var_tok.text, concept_tok.text))
        self.var_index[var_tok.text] = index

        while (tok := self.peek()) is not None and tok.kind == "role":
            self.pos += 1
            target = self.peek()
            if target is None:
                raise self.error(f"role :{tok.text} has no target")
            if target.kind == "(":
                # edges keep the textual order of their roles
                slot = len(self.edges)
                self.edges.append(None)
                self.edges[slot] = (index, self.parse_node(), tok.text, None, target.pos)
            elif target.kind == "string" or (target.kind == "symbol" and self.is_constant(target.text)):
                self.pos += 1
                self.edges.append((index, self.add_constant(target.text), tok.text, None, target.pos))
            elif target.kind == "symbol":
                self.pos += 1
                self.edges.append((index, None, tok.text, target.text, target.pos))
            else:
                raise self.error(f"role :{tok.text} has no target")
        self.take(")", "')'")
        return index

    def parse(self) -> AmrGraph:
        if not self.tokens:
            raise self.error("empty PENMAN text", 0)
        root = self.parse_node()
        if self.peek() is not None:
            tok = self.peek()
            if tok.kind == ")":
                raise self.error("unbalanced parentheses: unexpected ')'")
            raise self.error(f"trailing input after graph: {tok.text!r}")

        edges = []
        for source, target, role, ref, pos in self.edges:
            if ref is not None:
                if ref not in self.var_index:
                    raise self.error(f"reference to undeclared variable {ref!r}", pos)
                target = self.var_index[ref]
            if is_inverse_role(role) and not self.nodes[target].constant:
                edges.append(AmrEdge(target, source, role[:-3]))
            else:
                edges.append(AmrEdge(source, target, role))
        return AmrGraph(tuple(self.nodes), tuple(edges), root)


def parse_penman(text: str) -> AmrGraph:
    """Parses one PENMAN expression into an AmrGraph."""
    return _Parser(text).parse()


class _Attachment(NamedTuple):
    role: str  # as written, `-of` when attached from the edge's target
    node: int
    body: Optional[list]  # attachments of `node` when it is declared here


def _layout(graph: AmrGraph) -> Tuple[List[_Attachment], List[int]]:
    """
    Depth-first attachment tree of `graph` plus its declaration order.

    Edges are written from their source in insertion order. A node the root
    cannot reach along edge direction is attached from the target side of
    its edges with an inverse role.
    """
    forward = [[] for _ in range(graph.n)]
    for e in graph.edges:
        forward[e.source].append(e.target)
    reach, stack = {graph.root}, [graph.root]
    while stack:
        for t in forward[stack.pop()]:
            if t not in reach:
                reach.add(t)
                stack.append(t)

    incident = [[] for _ in range(graph.n)]
    for k, e in enumerate(graph.edges):
        incident[e.source].append((k, e.target, e.role))
        inverse = _inverted(e.role)
        if e.source not in reach and inverse and not graph.nodes[e.target].constant:
            incident[e.target].append((k, e.source, inverse))

    written, declared, order = set(), set(), []

    def visit(i: int) -> List[_Attachment]:
        declared.add(i)
        order.append(i)
        body = []
        for k, other, role in incident[i]:
            if k in written:
                continue
            written.add(k)
            if graph.nodes[other].constant:
                declared.add(other)
                order.append(other)
                body.append(_Attachment(role, other, None))
            elif other in declared:
                body.append(_Attachment(role, other, None))
            else:
                body.append(_Attachment(role, other, visit(other)))
        return body

    body = visit(graph.root)
    if len(declared) != graph.n:
        missing = [graph.nodes[i].variable for i in range(graph.n) if i not in declared]
        raise SerializeError(f"nodes with no writable attachment to the root: {missing}")
    return body, order


def serialize_penman(graph: AmrGraph) -> str:
    """
    Single-line PENMAN text; children follow edge insertion order and each node
    is declared at its first depth-first visit, later visits are bare references.
    """

    def render(i: int, body: List[_Attachment]) -> str:
        node = graph.nodes[i]
        parts = [f"({node.variable} / {node.concept}"]
        for a in body:
            target = graph.nodes[a.node]
            if target.constant:
                parts.append(f":{a.role} {target.concept}")
            elif a.body is None:
                parts.append(f":{a.role} {target.variable}")
            else:
                parts.append(f":{a.role} {render(a.node, a.body)}")
        return " ".join(parts) + ")"

    body, _ = _layout(graph)
    return render(graph.root, body)


def declaration_order(graph: AmrGraph) -> List[int]:
    """Node indices in the order serialize_penman declares them (constants included)."""
    return _layout(graph)[1]


def split_records(text: str) -> List[Tuple[str, Optional[str]]]:
    """
    Splits dataset text into (penman, target) pairs. Records are separated by
    blank lines; a TAB on a record's final line separates the graph from its
    target sentence, otherwise the target is None.
    """
    records = []
    for block in re.split(r"\n[ \t]*\n", text.replace("\r\n", "\n")):
        block = block.strip("\n")
        if not block.strip():
            continue
        lines = block.split("\n")
        graph_part, sep, target = lines[-1].partition("\t")
        if sep:
            records.append(("\n".join(lines[:-1] + [graph_part]), target.strip()))
        else:
            records.append((block, None))
    return records
