"""Reverse-mode automatic differentiation on a scalar tape.

Every quantity is a scalar ``Node`` recorded on a ``Tape`` in creation
order. A few fused vector operations (dot, matvec, norm_sq, cosine_sim)
keep graphs small for the dense models built on top of this engine. The
tape supports checkpoint/rewind so per-step graphs can be discarded while
parameter leaves persist.

A tape is single-threaded; separate tapes may run concurrently on
disjoint data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import NumericalAbort

# Floor applied to log (and sqrt) arguments. Below the floor the clamped
# function is constant, so the local derivative there is zero.
LOG_FLOOR = 1e-7


class Node:
    """One scalar value in the computation graph."""

    __slots__ = ("tape", "value", "grad", "op", "parents", "local_grads")

    def __init__(self, tape, value, op="leaf", parents=(), local_grads=()):
        self.tape = tape
        self.value = float(value)
        self.grad = 0.0
        self.op = op
        self.parents = parents
        self.local_grads = local_grads

    def __repr__(self):
        return f"Node({self.op}={self.value:.6g}, grad={self.grad:.6g})"

    # -- arithmetic (floats auto-wrap as constant nodes) -----------------

    def _coerce(self, other):
        if isinstance(other, Node):
            return other
        return self.tape.const(other)

    def __add__(self, other):
        o = self._coerce(other)
        return self.tape._record(
            Node(self.tape, self.value + o.value, "add", (self, o), (1.0, 1.0))
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return self.tape._record(
            Node(self.tape, self.value - o.value, "sub", (self, o), (1.0, -1.0))
        )

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        return self.tape._record(
            Node(self.tape, self.value * o.value, "mul", (self, o), (o.value, self.value))
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.value == 0.0:
            raise ZeroDivisionError("division node with zero denominator")
        inv = 1.0 / o.value
        return self.tape._record(
            Node(self.tape, self.value * inv, "div", (self, o),
                 (inv, -self.value * inv * inv))
        )

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __neg__(self):
        return self.tape._record(
            Node(self.tape, -self.value, "neg", (self,), (-1.0,))
        )

    def __pow__(self, exponent):
        return pow_const(self, exponent)


class Tape:
    """Ordered node storage with checkpoint/rewind.

    Rewinding to a checkpoint drops exactly the nodes created after it;
    leaves created before the mark (parameters) survive.
    """

    __slots__ = ("nodes", "checkpoints")

    def __init__(self):
        self.nodes = []
        self.checkpoints = []

    def __len__(self):
        return len(self.nodes)

    def _record(self, node):
        self.nodes.append(node)
        return node

    def leaf(self, value):
        return self._record(Node(self, value, "leaf"))

    def const(self, value):
        return self._record(Node(self, value, "const"))

    def leaf_vector(self, values):
        return [self.leaf(v) for v in values]

    def leaf_matrix(self, rows):
        return [self.leaf_vector(row) for row in rows]

    def checkpoint(self):
        mark = len(self.nodes)
        self.checkpoints.append(mark)
        return mark

    def rewind(self, mark):
        if mark > len(self.nodes):
            raise ValueError(f"rewind mark {mark} past end of tape ({len(self.nodes)})")
        del self.nodes[mark:]
        self.checkpoints = [c for c in self.checkpoints if c <= mark]

    def zero_grads(self):
        for n in self.nodes:
            n.grad = 0.0


# -- unary ops ------------------------------------------------------------


def exp(x: Node) -> Node:
    v = math.exp(x.value)
    return x.tape._record(Node(x.tape, v, "exp", (x,), (v,)))


def log(x: Node) -> Node:
    if x.value < 0.0:
        raise ValueError(f"log of negative value {x.value!r}")
    clamped = max(x.value, LOG_FLOOR)
    local = 0.0 if x.value < LOG_FLOOR else 1.0 / clamped
    return x.tape._record(Node(x.tape, math.log(clamped), "log", (x,), (local,)))


def sqrt(x: Node) -> Node:
    if x.value < 0.0:
        raise ValueError(f"sqrt of negative value {x.value!r}")
    clamped = max(x.value, LOG_FLOOR)
    v = math.sqrt(clamped)
    local = 0.0 if x.value < LOG_FLOOR else 0.5 / v
    return x.tape._record(Node(x.tape, v, "sqrt", (x,), (local,)))


def pow_const(x: Node, exponent) -> Node:
    if isinstance(exponent, Node):
        raise TypeError("pow_const takes a constant exponent; build exp(a*log(x)) instead")
    a = float(exponent)
    v = x.value ** a
    return x.tape._record(
        Node(x.tape, v, "pow_const", (x,), (a * x.value ** (a - 1.0) if a != 0.0 else 0.0,))
    )


def hinge(x: Node) -> Node:
    """max(0, x); subgradient 0 at the kink."""
    active = x.value > 0.0
    return x.tape._record(
        Node(x.tape, x.value if active else 0.0, "max0", (x,), (1.0 if active else 0.0,))
    )


def sigmoid(x: Node) -> Node:
    if x.value >= 0:
        v = 1.0 / (1.0 + math.exp(-x.value))
    else:
        e = math.exp(x.value)
        v = e / (1.0 + e)
    return x.tape._record(Node(x.tape, v, "sigmoid", (x,), (v * (1.0 - v),)))


def tanh(x: Node) -> Node:
    v = math.tanh(x.value)
    return x.tape._record(Node(x.tape, v, "tanh", (x,), (1.0 - v * v,)))


# -- fused vector ops ------------------------------------------------------


def dot(u, v) -> Node:
    if len(u) != len(v):
        raise ValueError(f"dot length mismatch: {len(u)} vs {len(v)}")
    value = 0.0
    for a, b in zip(u, v):
        value += a.value * b.value
    tape = u[0].tape
    return tape._record(
        Node(tape, value, "dot", tuple(u) + tuple(v),
             tuple(b.value for b in v) + tuple(a.value for a in u))
    )


def matvec(rows, x):
    """Matrix-vector product as one dot node per output row."""
    return [dot(row, x) for row in rows]


def norm_sq(u) -> Node:
    """Squared Euclidean norm of a node vector."""
    value = 0.0
    for a in u:
        value += a.value * a.value
    tape = u[0].tape
    return tape._record(
        Node(tape, value, "norm_sq", tuple(u), tuple(2.0 * a.value for a in u))
    )


def cosine_sim(u, v) -> Node:
    """Cosine similarity, clipped into [-1, 1] against float drift.

    Raises on zero-norm input: upstream of this op a vanished vector is a
    modeling bug (collapse), not data noise.
    """
    if len(u) != len(v):
        raise ValueError(f"cosine_sim length mismatch: {len(u)} vs {len(v)}")
    uu = sum(a.value * a.value for a in u)
    vv = sum(b.value * b.value for b in v)
    if uu == 0.0 or vv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm input")
    uv = sum(a.value * b.value for a, b in zip(u, v))
    nu = math.sqrt(uu)
    nv = math.sqrt(vv)
    c = uv / (nu * nv)
    c = min(1.0, max(-1.0, c))
    inv = 1.0 / (nu * nv)
    locals_u = tuple(b.value * inv - c * a.value / uu for a, b in zip(u, v))
    locals_v = tuple(a.value * inv - c * b.value / vv for a, b in zip(u, v))
    tape = u[0].tape
    return tape._record(
        Node(tape, c, "cosine_sim", tuple(u) + tuple(v), locals_u + locals_v)
    )


# -- backward --------------------------------------------------------------


def backward(root: Node) -> None:
    """Accumulate d(root)/d(node) into .grad over root's ancestors.

    Visits each reachable node exactly once in reverse topological order.
    Grads accumulate across calls; zero them (Tape.zero_grads) between
    passes that need independent derivatives.
    """
    if not isinstance(root, Node):
        raise TypeError("backward expects a scalar Node root")
    topo = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if node in visited:
            continue
        visited.add(node)
        stack.append((node, True))
        for p in node.parents:
            if p not in visited:
                stack.append((p, False))

    root.grad = 1.0
    for node in reversed(topo):
        g = node.grad
        if g == 0.0:
            continue
        parents = node.parents
        local = node.local_grads
        for i in range(len(parents)):
            parents[i].grad += g * local[i]


# -- optimizers ------------------------------------------------------------


def _check_finite(grads):
    for g in grads:
        if math.isnan(g) or math.isinf(g):
            raise NumericalAbort(f"non-finite gradient {g!r} in optimizer step")


def sgd_step(params, grads, lr):
    """In-place gradient descent on leaf nodes."""
    if len(params) != len(grads):
        raise ValueError("params/grads length mismatch")
    _check_finite(grads)
    for p, g in zip(params, grads):
        p.value -= lr * g


@dataclass
class AdamState:
    """First/second moment accumulators plus step counter."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params):
        n = len(params)
        return cls(m=[0.0] * n, v=[0.0] * n, t=0)


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ValueError("params/grads/state length mismatch")
    _check_finite(grads)
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.value -= lr * m_hat / (math.sqrt(v_hat) + eps)


def collect_grads(params):
    return [p.grad for p in params]
