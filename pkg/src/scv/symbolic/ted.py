"""Ordered tree edit distance (Zhang-Shasha) with unit costs."""

from __future__ import annotations

from .expr import KINDS, Expr, render

_KIND_RANK = {k: i for i, k in enumerate(KINDS)}


def sort_commutative(e: Expr) -> Expr:
    """Sort add/mul children by (node kind, rendered text), recursively."""
    children = tuple(sort_commutative(c) for c in e.children)
    if e.kind in ("add", "mul"):
        children = tuple(sorted(children, key=lambda c: (_KIND_RANK[c.kind], render(c))))
    if children == e.children:
        return e
    return Expr(e.kind, e.value, children)


def _postorder(root: Expr):
    """Labels, leftmost-leaf indices and keyroots in postorder."""
    labels = []
    lmd = []

    def walk(node):
        first = None
        for c in node.children:
            leaf = walk(c)
            if first is None:
                first = leaf
        idx = len(labels)
        labels.append(node.label)
        lmd.append(idx if first is None else first)
        return lmd[idx]

    walk(root)
    seen = {}
    for i, l in enumerate(lmd):
        seen[l] = i
    keyroots = sorted(seen.values())
    return labels, lmd, keyroots


def tree_edit_distance(t1: Expr | None, t2: Expr | None) -> int:
    """Unit-cost insert/delete/rename distance between ordered labeled trees.

    ``None`` stands for the empty tree.
    """
    if t1 is None:
        return 0 if t2 is None else t2.size()
    if t2 is None:
        return t1.size()
    l1, lmd1, kr1 = _postorder(t1)
    l2, lmd2, kr2 = _postorder(t2)
    n, m = len(l1), len(l2)
    td = [[0] * m for _ in range(n)]

    for i in kr1:
        for j in kr2:
            li, lj = lmd1[i], lmd2[j]
            rows, cols = i - li + 2, j - lj + 2
            fd = [[0] * cols for _ in range(rows)]
            for x in range(1, rows):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, cols):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, rows):
                for y in range(1, cols):
                    a, b = li + x - 1, lj + y - 1
                    if lmd1[a] == li and lmd2[b] == lj:
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[x - 1][y - 1] + (l1[a] != l2[b]),
                        )
                        td[a][b] = fd[x][y]
                    else:
                        p, q = lmd1[a] - li, lmd2[b] - lj
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[p][q] + td[a][b],
                        )
    return td[n - 1][m - 1]


def tree_similarity(t1: Expr | None, t2: Expr | None, canonical_order: bool = True) -> float:
    """``1 - TED / (|t1| + |t2|)``, with add/mul operands sorted first by default."""
    if canonical_order:
        t1 = None if t1 is None else sort_commutative(t1)
        t2 = None if t2 is None else sort_commutative(t2)
    total = (0 if t1 is None else t1.size()) + (0 if t2 is None else t2.size())
    if total == 0:
        return 1.0
    return 1.0 - tree_edit_distance(t1, t2) / total
