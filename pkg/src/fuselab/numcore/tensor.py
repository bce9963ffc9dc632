"""Dense float64 tensors with reverse-mode automatic differentiation.

A Tensor wraps a numpy array. Differentiable operations (see ops.py)
link their output to the input tensors, so every result carries the
compute graph that produced it as a DAG of parent references. Calling
``backward()`` on a scalar result walks that DAG once in reverse
topological order and accumulates d(result)/d(node) into ``grad`` for
every node with ``requires_grad``.

Gradient semantics: repeated ``backward()`` calls without an intervening
``zero_grads`` SUM into ``grad``. Alternating minimax updates rely on
this, so it is the documented default rather than a footgun.

Graph construction and backward are single-threaded per graph; distinct
graphs are independent (there is no global tape) and may run on distinct
threads. A Tensor with no graph references is plain data and safe to
share.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ContractError, DomainError

Arrayish = Union["Tensor", np.ndarray, float, int, Sequence]


class Tensor:
    """A node in the compute graph: value, optional gradient, provenance."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_op", "_parents", "_backward")

    def __init__(self, data: Arrayish, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._op: Optional[str] = None
        self._parents: Tuple[Tensor, ...] = ()
        # Maps the gradient flowing into this node to gradients for each parent.
        self._backward: Optional[Callable[[np.ndarray], Tuple[np.ndarray, ...]]] = None

    # -- construction used by ops --------------------------------------

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        op: str,
        parents: Tuple["Tensor", ...],
        backward: Callable[[np.ndarray], Tuple[np.ndarray, ...]],
    ) -> "Tensor":
        if not np.isfinite(data).all():
            raise DomainError(f"op '{op}' produced a non-finite value")
        out = cls(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._op = op
            out._parents = parents
            out._backward = backward
        return out

    # -- basic queries ---------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """A view of the same values with no graph attached."""
        return Tensor(self.data, requires_grad=False)

    def copy(self) -> "Tensor":
        t = Tensor(self.data.copy(), requires_grad=self.requires_grad, name=self.name)
        return t

    def __repr__(self) -> str:
        head = f"Tensor(shape={self.shape}"
        if self.name:
            head += f", name={self.name!r}"
        if self._op:
            head += f", op={self._op!r}"
        return head + ")"

    # -- autodiff ----------------------------------------------------------

    def backward(self) -> None:
        """Populate ``grad`` on every reachable tensor with requires_grad.

        The loss must hold a single value. Gradients accumulate across
        calls; use zero_grads between independent passes.
        """
        if self.data.size != 1:
            raise ContractError(f"backward() requires a scalar loss, got shape {self.shape}")
        if not self.requires_grad:
            return

        order = self._topo_order()
        flows = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = flows.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
            if node._backward is None:
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in flows:
                    flows[key] = flows[key] + pg
                else:
                    flows[key] = pg

    def _topo_order(self) -> list:
        """Iterative post-order DFS; parents always precede children."""
        order: list = []
        seen = set()
        stack: list = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        return order

    def zero_grad(self) -> None:
        self.grad = None

    # -- operator sugar (defined in ops.py, bound below) --------------------

    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops

        return ops.div(other, self)

    def __neg__(self):
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)

    def __getitem__(self, key):
        from . import ops

        return ops.tslice(self, key)

    def reshape(self, *shape):
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis=None):
        from . import ops

        return ops.tsum(self, axis)

    def mean(self, axis=None):
        from . import ops

        return ops.tmean(self, axis)


def as_tensor(x: Arrayish) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def zero_grads(tensors: Iterable[Tensor]) -> None:
    """Reset accumulated gradients before an independent backward pass."""
    for t in tensors:
        t.grad = None


def global_grad_norm(tensors: Iterable[Tensor]) -> float:
    total = 0.0
    for t in tensors:
        if t.grad is not None:
            total += float(np.sum(t.grad * t.grad))
    return float(np.sqrt(total))


def clip_grad_norm(tensors: Sequence[Tensor], max_norm: float) -> float:
    """Scale gradients in place so their joint L2 norm is at most max_norm.

    Returns the pre-clip norm.
    """
    norm = global_grad_norm(tensors)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for t in tensors:
            if t.grad is not None:
                t.grad *= scale
    return norm
