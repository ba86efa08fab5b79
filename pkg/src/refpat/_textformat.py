"""Token-level reader and writer for the pattern/mesh text grammar.

::

    % comment lines start with '%'
    <#nodes> <#elements>
    <id> <name>                      (patterns only)
    <x> <y> <z>                      (#nodes lines)
    <type code> <material> <nodes>   (#elements lines)
"""
from __future__ import annotations

from typing import Iterator

import numpy as np

from .errors import ParseError
from .topology import ElementType, node_count


def content_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        yield number, stripped.split()


class LineReader:
    def __init__(self, text: str, source=None):
        self._it = content_lines(text)
        self.source = source
        self.last_line = 0

    def next(self, what: str) -> tuple[int, list[str]]:
        try:
            number, tokens = next(self._it)
        except StopIteration:
            raise ParseError(f"unexpected end of input, expected {what}",
                             self.last_line or None, self.source) from None
        self.last_line = number
        return number, tokens

    def error(self, message, line=None):
        return ParseError(message, line if line is not None else self.last_line, self.source)

    def expect_end(self, declared: str):
        for number, tokens in self._it:
            raise ParseError(f"unexpected content {' '.join(tokens)!r} after {declared}",
                             number, self.source)

    def ints(self, tokens, line) -> list[int]:
        try:
            return [int(t) for t in tokens]
        except ValueError:
            raise self.error(f"expected integers, got {' '.join(tokens)!r}", line) from None


def read_counts(reader: LineReader) -> tuple[int, int]:
    line, tokens = reader.next("'<#nodes> <#elements>'")
    if len(tokens) != 2:
        raise reader.error("header must be '<#nodes> <#elements>'", line)
    n_nodes, n_elements = reader.ints(tokens, line)
    if n_nodes < 0 or n_elements < 0:
        raise reader.error("counts must be non-negative", line)
    return n_nodes, n_elements


def read_body(reader: LineReader, n_nodes: int, n_elements: int):
    """Read the coordinate and element sections.

    Returns
    -------
    coords : ndarray, shape (n_nodes, 3)
    elements : list of (ElementType, material, tuple of node ids)
    lines : list of int
        Source line of each element.
    """
    coords = np.zeros((n_nodes, 3))
    for i in range(n_nodes):
        line, tokens = reader.next(f"coordinates of node {i}")
        if len(tokens) != 3:
            raise reader.error(f"node {i}: expected 3 coordinates, got {len(tokens)}", line)
        try:
            coords[i] = [float(t) for t in tokens]
        except ValueError:
            raise reader.error(f"node {i}: invalid coordinates {' '.join(tokens)!r}",
                               line) from None
    elements, lines = [], []
    for e in range(n_elements):
        line, tokens = reader.next(f"element {e}")
        values = reader.ints(tokens, line)
        if len(values) < 2:
            raise reader.error(f"element {e}: expected '<type> <material> <nodes...>'", line)
        try:
            etype = ElementType(values[0])
        except ValueError:
            raise reader.error(f"element {e}: unknown element type code {values[0]}",
                               line) from None
        nodes = tuple(values[2:])
        if len(nodes) != node_count(etype):
            raise reader.error(f"element {e}: {etype.label} needs {node_count(etype)} "
                               f"nodes, got {len(nodes)}", line)
        for k in nodes:
            if not 0 <= k < n_nodes:
                raise reader.error(f"element {e}: node id {k} outside 0..{n_nodes - 1}", line)
        elements.append((etype, values[1], nodes))
        lines.append(line)
    reader.expect_end(f"{n_nodes} nodes and {n_elements} elements")
    return coords, elements, lines


def format_real(x: float) -> str:
    return f"{float(x) + 0.0:.17g}"


def write_body(coords, elements) -> list[str]:
    out = ["% node coordinates"]
    for row in np.asarray(coords, dtype=float).reshape(-1, 3):
        out.append(" ".join(format_real(v) for v in row))
    out.append("% type material node ids")
    for etype, mat, nodes in elements:
        out.append(" ".join(str(int(v)) for v in (int(etype), mat, *nodes)))
    return out
