"""Text ingestion and persistence: edge lists, mask pair lists, and the
versioned fit artifact format.

All formats are line-oriented text. Floats are written with Python's shortest
round-trip repr, so save -> load -> save is byte stable and values survive at
full 64-bit precision.
"""

from __future__ import annotations

import os
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ParseError
from .solver import FitResult, SolverConfig

FIT_FORMAT = "gsbm-fit"
FIT_VERSION = "v1"

_CONFIG_FIELDS = ("lambda1", "lambda2", "epsilon", "eta", "max_iters", "rel_tol", "svd_tol")


@dataclass
class ObservedGraph:
    """Adjacency and observation mask with original node labels.

    A records edges among examined and unexamined dyads alike; omega records
    which dyads were examined. An edge on an unexamined dyad is legal but
    suspicious, so it triggers a warning.
    """

    n: int
    adjacency: np.ndarray
    mask: np.ndarray
    node_names: list[str]

    def __post_init__(self):
        A, omega = self.adjacency, self.mask
        for name, M in (("adjacency", A), ("mask", omega)):
            if M.shape != (self.n, self.n):
                raise ConfigError(f"{name} must be {self.n}x{self.n}, got {M.shape}")
            if not np.array_equal(M, M.T):
                raise ConfigError(f"{name} must be symmetric")
            if np.diag(M).any():
                raise ConfigError(f"{name} must have a zero diagonal")
            if not np.isin(M, (0.0, 1.0)).all():
                raise ConfigError(f"{name} entries must be 0 or 1")
        if len(self.node_names) != self.n:
            raise ConfigError("need one node name per index")
        if ((A == 1.0) & (omega == 0.0)).any():
            warnings.warn(
                "adjacency records edges on unexamined dyads",
                RuntimeWarning,
                stacklevel=2,
            )


def _content_lines(text):
    """Yield (line_no, tokens) with comments ('#' to end of line) stripped."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens = content.split()
        if tokens:
            yield line_no, tokens


def parse_edge_list(text):
    """Undirected graph from whitespace-separated label pairs.

    Labels are mapped to dense indices in first-appearance order; duplicate
    edges collapse, self-loops are dropped with a warning (the node is still
    registered). The mask defaults to all dyads observed.
    """
    index = {}
    edges = set()
    for line_no, tokens in _content_lines(text):
        if len(tokens) != 2:
            raise ParseError(
                f"line {line_no}: expected two node labels, got {len(tokens)}",
                line_no=line_no,
            )
        a = index.setdefault(tokens[0], len(index))
        b = index.setdefault(tokens[1], len(index))
        if a == b:
            warnings.warn(f"line {line_no}: self-loop on {tokens[0]!r} dropped",
                          RuntimeWarning, stacklevel=2)
            continue
        edges.add((min(a, b), max(a, b)))

    n = len(index)
    A = np.zeros((n, n))
    for a, b in edges:
        A[a, b] = A[b, a] = 1.0
    mask = np.ones((n, n)) - np.eye(n) if n else np.zeros((0, 0))
    names = [None] * n
    for label, idx in index.items():
        names[idx] = label
    return ObservedGraph(n=n, adjacency=A, mask=mask, node_names=names)


def parse_mask(text, n, mode):
    """Observation mask from listed index pairs.

    mode='observed': listed pairs (symmetrized) are the examined dyads;
    mode='missing': listed pairs are the unexamined ones, everything else
    off-diagonal is examined.
    """
    if mode not in ("observed", "missing"):
        raise ConfigError(f"mask mode must be 'observed' or 'missing', got {mode!r}")
    listed = np.zeros((n, n))
    for line_no, tokens in _content_lines(text):
        if len(tokens) != 2:
            raise ParseError(
                f"line {line_no}: expected two indices, got {len(tokens)}",
                line_no=line_no,
            )
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(
                f"line {line_no}: indices must be integers, got {tokens}",
                line_no=line_no,
            ) from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(
                f"line {line_no}: index out of range for n={n}", line_no=line_no
            )
        if i == j:
            warnings.warn(f"line {line_no}: diagonal pair dropped",
                          RuntimeWarning, stacklevel=2)
            continue
        listed[i, j] = listed[j, i] = 1.0
    if mode == "observed":
        return listed
    return np.ones((n, n)) - np.eye(n) - listed


def largest_connected_component(graph):
    """Restriction of an ObservedGraph to its largest connected component.

    Components are taken over recorded edges; ties break towards the
    component containing the smallest node index. Relative node order is
    preserved.
    """
    n = graph.n
    seen = np.zeros(n, dtype=bool)
    best = []
    for start in range(n):
        if seen[start]:
            continue
        comp = []
        queue = deque([start])
        seen[start] = True
        while queue:
            node = queue.popleft()
            comp.append(node)
            for nbr in np.flatnonzero(graph.adjacency[node]):
                if not seen[nbr]:
                    seen[nbr] = True
                    queue.append(nbr)
        if len(comp) > len(best):
            best = comp
    keep = np.sort(np.asarray(best, dtype=np.int64))
    sub = np.ix_(keep, keep)
    return ObservedGraph(
        n=len(keep),
        adjacency=graph.adjacency[sub],
        mask=graph.mask[sub],
        node_names=[graph.node_names[i] for i in keep],
    )


def _fmt(x):
    return repr(float(x))


def _matrix_lines(M):
    return [",".join(_fmt(x) for x in row) for row in M]


def dumps_fit(fit, node_names=None):
    """Serialize a fit to the versioned text format."""
    n = fit.L_hat.shape[0]
    cfg = fit.config_echo
    lines = [f"{FIT_FORMAT} {FIT_VERSION} n={n}", "# config"]
    for field in _CONFIG_FIELDS:
        value = getattr(cfg, field)
        lines.append(f"{field},{value!r}" if isinstance(value, int) else f"{field},{_fmt(value)}")
    lines += ["# meta", f"iterations,{fit.iterations}", f"converged,{int(fit.converged)}"]
    if node_names is not None:
        lines.append("# names")
        lines.extend(str(name) for name in node_names)
    lines.append("# L")
    lines.extend(_matrix_lines(fit.L_hat))
    lines.append("# S")
    lines.extend(_matrix_lines(fit.S_hat))
    lines.append("# trace")
    lines.extend(_fmt(x) for x in fit.objective_trace)
    return "\n".join(lines) + "\n"


def _parse_matrix(lines, n, what):
    if len(lines) < n:
        raise ParseError(f"fit file truncated inside the {what} block")
    rows = []
    for line in lines[:n]:
        row = [float(tok) for tok in line.split(",")]
        if len(row) != n:
            raise ParseError(f"{what} row has {len(row)} entries, expected {n}")
        rows.append(row)
    return np.asarray(rows).reshape(n, n), lines[n:]


def loads_fit(text):
    """Parse the fit text format back into (FitResult, node_names or None)."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty fit file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != FIT_FORMAT or not header[2].startswith("n="):
        raise ParseError(f"unrecognized fit header: {lines[0]!r}")
    if header[1] != FIT_VERSION:
        raise ParseError(
            f"unsupported fit format version {header[1]!r} (expected {FIT_VERSION})"
        )
    try:
        n = int(header[2][2:])
    except ValueError:
        raise ParseError(f"bad node count in header: {lines[0]!r}") from None

    sections = {}
    current = None
    for line in lines[1:]:
        if line.startswith("# "):
            current = line[2:]
            sections[current] = []
        elif current is None:
            raise ParseError(f"content before first section header: {line!r}")
        else:
            sections[current].append(line)

    for required in ("config", "meta", "L", "S", "trace"):
        if required not in sections:
            raise ParseError(f"fit file truncated: missing {required!r} block")

    kv = {}
    for block in ("config", "meta"):
        for line in sections[block]:
            key, _, value = line.partition(",")
            kv[key] = value
    try:
        cfg = SolverConfig(
            lambda1=float(kv["lambda1"]),
            lambda2=float(kv["lambda2"]),
            epsilon=float(kv["epsilon"]),
            eta=float(kv["eta"]),
            max_iters=int(kv["max_iters"]),
            rel_tol=float(kv["rel_tol"]),
            svd_tol=float(kv["svd_tol"]),
        )
        iterations = int(kv["iterations"])
        converged = bool(int(kv["converged"]))
    except (KeyError, ValueError) as err:
        raise ParseError(f"bad config/meta block: {err}") from None

    L, rest = _parse_matrix(sections["L"], n, "L")
    if rest:
        raise ParseError("unexpected extra rows in the L block")
    S, rest = _parse_matrix(sections["S"], n, "S")
    if rest:
        raise ParseError("unexpected extra rows in the S block")
    trace = np.asarray([float(tok) for tok in sections["trace"]])

    names = sections.get("names")
    if names is not None and len(names) != n:
        raise ParseError(f"names block has {len(names)} entries, expected {n}")

    result = FitResult(
        L_hat=L,
        S_hat=S,
        objective_trace=trace,
        iterations=iterations,
        converged=converged,
        config_echo=cfg,
    )
    return result, names


def write_text_atomic(path, text):
    """Write via a temp file and rename, so readers never see partial output."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def save_fit(fit, path, node_names=None):
    write_text_atomic(path, dumps_fit(fit, node_names=node_names))


def load_fit(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_fit(fh.read())


def format_edge_list(graph):
    """Edge-list text (i < j once per edge) using original labels."""
    iu = np.argwhere(np.triu(graph.adjacency, k=1) == 1.0)
    lines = [f"{graph.node_names[i]} {graph.node_names[j]}" for i, j in iu]
    return "\n".join(lines) + ("\n" if lines else "")


def format_pair_list(pairs, names=None):
    """Pair-list text, optionally translating indices to labels."""
    if names is None:
        lines = [f"{i} {j}" for i, j in pairs]
    else:
        lines = [f"{names[i]} {names[j]}" for i, j in pairs]
    return "\n".join(lines) + ("\n" if lines else "")
