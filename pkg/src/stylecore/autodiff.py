"""Reverse-mode automatic differentiation over dense numpy tensors.

A ``Tensor`` wraps a float64 ndarray and records the operations applied to
it.  Calling ``backward()`` on a scalar result walks the recorded graph in
reverse topological order and accumulates gradients into every tensor that
was created with ``requires_grad=True``.

The op set is intentionally small: exactly what the image losses and the
convolutional feature bank need.  All selection-style ops (min/max
reductions, gather of argmin entries) treat the selected indices as
constants, so gradients flow only through the selected values.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class AutodiffError(RuntimeError):
    pass


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Tensor:
    """A node in the computation graph.

    ``data`` is always a float64 ndarray.  ``grad`` is populated by
    ``backward()`` for tensors with ``requires_grad=True``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev", "_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._backward: Callable[[], None] | None = None
        self._prev: tuple[Tensor, ...] = ()
        self._done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate gradients of every reachable ``requires_grad`` leaf.

        The loss must be scalar.  A second call on the same recorded graph
        is an error: the tape is consumed.
        """
        if self.data.size != 1:
            raise AutodiffError("backward() requires a scalar loss")
        if self._done:
            raise AutodiffError("backward() already ran on this graph; re-record first")

        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._prev:
                if id(p) not in seen:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward()
            node._done = True

    # ---- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Iterable[Tensor], backward) -> Tensor:
    parents = tuple(parents)
    out = Tensor(data)
    if any(p.requires_grad or p._backward is not None for p in parents):
        out.requires_grad = True
        out._prev = parents
        out._backward = backward(out)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---- elementwise arithmetic ---------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def bw(out):
        def run():
            if a.requires_grad or a._backward is not None:
                a._accumulate(_unbroadcast(out.grad, a.shape))
            if b.requires_grad or b._backward is not None:
                b._accumulate(_unbroadcast(out.grad, b.shape))
        return run

    return _make(data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def bw(out):
        def run():
            if a.requires_grad or a._backward is not None:
                a._accumulate(_unbroadcast(out.grad, a.shape))
            if b.requires_grad or b._backward is not None:
                b._accumulate(_unbroadcast(-out.grad, b.shape))
        return run

    return _make(data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def bw(out):
        def run():
            if a.requires_grad or a._backward is not None:
                a._accumulate(_unbroadcast(out.grad * b.data, a.shape))
            if b.requires_grad or b._backward is not None:
                b._accumulate(_unbroadcast(out.grad * a.data, b.shape))
        return run

    return _make(data, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if np.any(b.data == 0.0):
        raise ZeroDivisionError("division by zero in autodiff graph")
    data = a.data / b.data

    def bw(out):
        def run():
            if a.requires_grad or a._backward is not None:
                a._accumulate(_unbroadcast(out.grad / b.data, a.shape))
            if b.requires_grad or b._backward is not None:
                b._accumulate(_unbroadcast(-out.grad * a.data / (b.data * b.data), b.shape))
        return run

    return _make(data, (a, b), bw)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise AutodiffError("matmul expects 2-D tensors")
    if a.shape[1] != b.shape[0]:
        raise AutodiffError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def bw(out):
        def run():
            if a.requires_grad or a._backward is not None:
                a._accumulate(out.grad @ b.data.T)
            if b.requires_grad or b._backward is not None:
                b._accumulate(a.data.T @ out.grad)
        return run

    return _make(data, (a, b), bw)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    data = np.sqrt(a.data)

    def bw(out):
        def run():
            a._accumulate(out.grad * 0.5 / np.maximum(data, 1e-300))
        return run

    return _make(data, (a,), bw)


def sqrt_grad0(a) -> Tensor:
    """Exact square root whose backward takes the zero subgradient at 0,
    for distance expressions that legitimately hit zero."""
    a = as_tensor(a)
    data = np.sqrt(np.maximum(a.data, 0.0))

    def bw(out):
        def run():
            g = np.where(a.data > 1e-24, 0.5 / np.where(data > 0, data, 1.0), 0.0)
            a._accumulate(out.grad * g)
        return run

    return _make(data, (a,), bw)


def absolute(a) -> Tensor:
    a = as_tensor(a)
    data = np.abs(a.data)

    def bw(out):
        def run():
            a._accumulate(out.grad * np.sign(a.data))
        return run

    return _make(data, (a,), bw)


def log(a) -> Tensor:
    a = as_tensor(a)
    data = np.log(a.data)

    def bw(out):
        def run():
            a._accumulate(out.grad / a.data)
        return run

    return _make(data, (a,), bw)


def l2_norm_rows(a) -> Tensor:
    """Exact per-row Euclidean norm of a 2-D tensor; the backward uses the
    zero subgradient at zero-norm rows."""
    a = as_tensor(a)
    data = np.sqrt(np.sum(a.data * a.data, axis=1))

    def bw(out):
        def run():
            denom = np.where(data > 1e-12, data, 1.0)[:, None]
            scale = np.where(data > 1e-12, 1.0, 0.0)[:, None]
            a._accumulate(out.grad[:, None] * a.data / denom * scale)
        return run

    return _make(data, (a,), bw)


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    mask = a.data >= 0
    data = np.where(mask, a.data, slope * a.data)

    def bw(out):
        def run():
            a._accumulate(out.grad * np.where(mask, 1.0, slope))
        return run

    return _make(data, (a,), bw)


# ---- reductions ----------------------------------------------------------


def tsum(a, axis=None) -> Tensor:
    a = as_tensor(a)
    data = np.sum(a.data, axis=axis)

    def bw(out):
        def run():
            g = out.grad
            if axis is not None:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.shape).copy())
        return run

    return _make(data, (a,), bw)


def tmean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    data = np.mean(a.data, axis=axis)
    count = a.data.size if axis is None else a.shape[axis]

    def bw(out):
        def run():
            g = out.grad
            if axis is not None:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.shape) / count)
        return run

    return _make(data, (a,), bw)


def _extreme_reduce(a, axis, mode: str) -> Tensor:
    a = as_tensor(a)
    pick = np.argmin if mode == "min" else np.argmax
    if axis is None:
        flat_idx = int(pick(a.data))
        data = a.data.reshape(-1)[flat_idx]

        def bw(out):
            def run():
                g = np.zeros_like(a.data).reshape(-1)
                g[flat_idx] = out.grad
                a._accumulate(g.reshape(a.shape))
            return run

    else:
        idx = pick(a.data, axis=axis)
        data = np.take_along_axis(a.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

        def bw(out):
            def run():
                g = np.zeros_like(a.data)
                np.put_along_axis(
                    g, np.expand_dims(idx, axis), np.expand_dims(out.grad, axis), axis=axis
                )
                a._accumulate(g)
            return run

    return _make(np.asarray(data, dtype=np.float64), (a,), bw)


def reduce_min(a, axis=None) -> Tensor:
    """Min reduction; gradient goes to the first argmin on ties."""
    return _extreme_reduce(a, axis, "min")


def reduce_max(a, axis=None) -> Tensor:
    return _extreme_reduce(a, axis, "max")


def maximum_scalar(a, b) -> Tensor:
    """max of two scalars; ties route the gradient to the first argument."""
    a, b = as_tensor(a), as_tensor(b)
    take_a = float(a.data) >= float(b.data)
    data = a.data if take_a else b.data

    def bw(out):
        def run():
            if take_a:
                if a.requires_grad or a._backward is not None:
                    a._accumulate(out.grad)
            elif b.requires_grad or b._backward is not None:
                b._accumulate(out.grad)
        return run

    return _make(data.copy(), (a, b), bw)


# ---- shape ops -----------------------------------------------------------


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    data = a.data.reshape(shape)

    def bw(out):
        def run():
            a._accumulate(out.grad.reshape(a.shape))
        return run

    return _make(data, (a,), bw)


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    data = np.transpose(a.data, axes)
    inv = None if axes is None else np.argsort(axes)

    def bw(out):
        def run():
            a._accumulate(np.transpose(out.grad, inv))
        return run

    return _make(data, (a,), bw)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(out):
        def run():
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                if t.requires_grad or t._backward is not None:
                    sl = [slice(None)] * out.grad.ndim
                    sl[axis] = slice(lo, hi)
                    t._accumulate(out.grad[tuple(sl)])
        return run

    return _make(data, tensors, bw)


def gather_rows(a, rows) -> Tensor:
    """Select rows (axis 0); duplicate indices accumulate gradient."""
    a = as_tensor(a)
    rows = np.asarray(rows, dtype=np.int64)
    data = a.data[rows]

    def bw(out):
        def run():
            g = np.zeros_like(a.data)
            np.add.at(g, rows, out.grad)
            a._accumulate(g)
        return run

    return _make(data, (a,), bw)


def take_pairs(a, rows, cols) -> Tensor:
    """Select entries a[rows[k], cols[k]] of a 2-D tensor as a vector."""
    a = as_tensor(a)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    data = a.data[rows, cols]

    def bw(out):
        def run():
            g = np.zeros_like(a.data)
            np.add.at(g, (rows, cols), out.grad)
            a._accumulate(g)
        return run

    return _make(data, (a,), bw)


# ---- image / conv ops ----------------------------------------------------


def conv2d(x, kernel, stride: int = 1, padding: int | None = None) -> Tensor:
    """2-D convolution of an HxWxCin tensor with a kh x kw x Cin x Cout kernel.

    Default padding keeps spatial size for stride 1 ("same").  The kernel
    must be odd-sized.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.ndim != 3 or kernel.ndim != 4:
        raise AutodiffError("conv2d expects HWC input and khkwCinCout kernel")
    kh, kw, cin, cout = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise AutodiffError("conv2d kernel must be odd-sized")
    if x.shape[2] != cin:
        raise AutodiffError(f"conv2d channel mismatch: input {x.shape[2]}, kernel {cin}")
    if padding is None:
        padding = kh // 2
    h, w, _ = x.shape
    xp = np.pad(x.data, ((padding, padding), (padding, padding), (0, 0)))
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(0, 1))
    win = win[::stride, ::stride]  # oh x ow x cin x kh x kw
    cols = win.transpose(0, 1, 3, 4, 2).reshape(oh * ow, kh * kw * cin)
    kmat = kernel.data.reshape(kh * kw * cin, cout)
    data = (cols @ kmat).reshape(oh, ow, cout)

    def bw(out):
        def run():
            go = out.grad.reshape(oh * ow, cout)
            if kernel.requires_grad or kernel._backward is not None:
                kernel._accumulate((cols.T @ go).reshape(kh, kw, cin, cout))
            if x.requires_grad or x._backward is not None:
                gcols = (go @ kmat.T).reshape(oh, ow, kh, kw, cin)
                gx = np.zeros_like(xp)
                for di in range(kh):
                    for dj in range(kw):
                        gx[di:di + oh * stride:stride, dj:dj + ow * stride:stride] += gcols[:, :, di, dj, :]
                if padding:
                    gx = gx[padding:padding + h, padding:padding + w]
                x._accumulate(gx)
        return run

    return _make(data, (x, kernel), bw)


def avg_pool2(x) -> Tensor:
    """2x2 average pooling, stride 2; border windows are clipped and averaged
    over the cells actually present, so odd sizes pool to ceil(n/2)."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise AutodiffError("avg_pool2 expects HWC input")
    h, w, c = x.shape
    oh, ow = (h + 1) // 2, (w + 1) // 2
    data = np.zeros((oh, ow, c))
    count = np.zeros((oh, ow, 1))
    for di in range(2):
        for dj in range(2):
            sub = x.data[di::2, dj::2]
            data[: sub.shape[0], : sub.shape[1]] += sub
            count[: sub.shape[0], : sub.shape[1]] += 1
    data = data / count

    def bw(out):
        def run():
            g = np.zeros_like(x.data)
            gn = out.grad / count
            for di in range(2):
                for dj in range(2):
                    sh = len(range(di, h, 2))
                    sw = len(range(dj, w, 2))
                    g[di::2, dj::2] += gn[:sh, :sw]
            x._accumulate(g)
        return run

    return _make(data, (x,), bw)


def _interp_matrix(n_src: int, n_dst: int) -> np.ndarray:
    """Dense bilinear interpolation matrix, half-pixel centers, clamped."""
    pos = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    i1 = np.clip(i0 + 1, 0, n_src - 1)
    i0 = np.clip(i0, 0, n_src - 1)
    m = np.zeros((n_dst, n_src))
    rows = np.arange(n_dst)
    np.add.at(m, (rows, i0), 1.0 - frac)
    np.add.at(m, (rows, i1), frac)
    return m


_INTERP_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _interp(n_src: int, n_dst: int) -> np.ndarray:
    key = (n_src, n_dst)
    got = _INTERP_CACHE.get(key)
    if got is None:
        got = _interp_matrix(n_src, n_dst)
        if len(_INTERP_CACHE) < 512:
            _INTERP_CACHE[key] = got
    return got


def resize_bilinear(x, new_h: int, new_w: int) -> Tensor:
    """Bilinear resize of an HxWxC tensor (half-pixel centers, clamped)."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise AutodiffError("resize_bilinear expects HWC input")
    h, w, c = x.shape
    if new_h < 1 or new_w < 1 or h < 1 or w < 1:
        raise AutodiffError("resize_bilinear needs positive sizes")
    rh = _interp(h, new_h)
    rw = _interp(w, new_w)
    data = np.einsum("ab,bwc->awc", rh, x.data, optimize=True)
    data = np.einsum("cb,abd->acd", rw, data, optimize=True)

    def bw(out):
        def run():
            g = np.einsum("ab,awc->bwc", rh, out.grad, optimize=True)
            g = np.einsum("cb,acd->abd", rw, g, optimize=True)
            x._accumulate(g)
        return run

    return _make(data, (x,), bw)


def linear_solve(a, b) -> Tensor:
    """Solve A X = B for X with gradients through both A and B."""
    a, b = as_tensor(a), as_tensor(b)
    sol = np.linalg.solve(a.data, b.data)

    def bw(out):
        def run():
            gb = np.linalg.solve(a.data.T, out.grad)
            if b.requires_grad or b._backward is not None:
                b._accumulate(gb)
            if a.requires_grad or a._backward is not None:
                a._accumulate(-gb @ sol.T)
        return run

    return _make(sol, (a, b), bw)


def tps_kernel(s) -> Tensor:
    """Biharmonic spline kernel from squared distance: U = 0.5 * s * log(s).

    Equals r^2 log r for r = sqrt(s), with U(0) = 0.
    """
    s = as_tensor(s)
    safe = np.maximum(s.data, 1e-300)
    data = np.where(s.data > 0, 0.5 * safe * np.log(safe), 0.0)

    def bw(out):
        def run():
            d = np.where(s.data > 0, 0.5 * (np.log(safe) + 1.0), 0.0)
            s._accumulate(out.grad * d)
        return run

    return _make(data, (s,), bw)


def warp_bilinear(img, flow) -> Tensor:
    """Sample img at (pixel + flow) with bilinear weights, clamp-to-border.

    ``img`` is HxWxC, ``flow`` is HxWx2 holding (row, col) displacements.
    Differentiable in both the image and the flow.
    """
    img, flow = as_tensor(img), as_tensor(flow)
    h, w, c = img.shape
    if flow.shape != (h, w, 2):
        raise AutodiffError(f"flow shape {flow.shape} does not match image {img.shape}")
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    sr = rr + flow.data[:, :, 0]
    sc = cc + flow.data[:, :, 1]
    sr_cl = np.clip(sr, 0.0, h - 1.0)
    sc_cl = np.clip(sc, 0.0, w - 1.0)
    r0 = np.floor(sr_cl).astype(np.int64)
    c0 = np.floor(sc_cl).astype(np.int64)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (sr_cl - r0)[..., None]
    fc = (sc_cl - c0)[..., None]
    i00 = img.data[r0, c0]
    i01 = img.data[r0, c1]
    i10 = img.data[r1, c0]
    i11 = img.data[r1, c1]
    data = (
        i00 * (1 - fr) * (1 - fc)
        + i01 * (1 - fr) * fc
        + i10 * fr * (1 - fc)
        + i11 * fr * fc
    )
    # Flow gradient is zero where the sample was clamped outside the image.
    in_r = ((sr > 0.0) & (sr < h - 1.0))[..., None]
    in_c = ((sc > 0.0) & (sc < w - 1.0))[..., None]

    def bw(out):
        def run():
            g = out.grad
            if img.requires_grad or img._backward is not None:
                gi = np.zeros_like(img.data)
                np.add.at(gi, (r0, c0), g * (1 - fr) * (1 - fc))
                np.add.at(gi, (r0, c1), g * (1 - fr) * fc)
                np.add.at(gi, (r1, c0), g * fr * (1 - fc))
                np.add.at(gi, (r1, c1), g * fr * fc)
                img._accumulate(gi)
            if flow.requires_grad or flow._backward is not None:
                dr = (i10 - i00) * (1 - fc) + (i11 - i01) * fc
                dc = (i01 - i00) * (1 - fr) + (i11 - i10) * fr
                gr = np.sum(g * dr * in_r, axis=2)
                gc = np.sum(g * dc * in_c, axis=2)
                flow._accumulate(np.stack([gr, gc], axis=2))
        return run

    return _make(data, (img, flow), bw)


# ---- testing oracle -------------------------------------------------------


def finite_diff_check(
    f: Callable[[Tensor], Tensor],
    x0: np.ndarray,
    eps: float = 1e-3,
    coords: np.ndarray | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` maps a Tensor to a scalar Tensor and must be deterministic.
    ``coords`` optionally restricts the check to a subset of flat indices
    (the default checks every coordinate).
    """
    x0 = _as_array(x0)
    leaf = Tensor(x0.copy(), requires_grad=True)
    f(leaf).backward()
    analytic = leaf.grad.reshape(-1)

    if coords is None:
        coords = np.arange(x0.size)
    flat = x0.reshape(-1)
    worst = 0.0
    for k in coords:
        bump = flat.copy()
        bump[k] += eps
        fp = float(f(Tensor(bump.reshape(x0.shape))).data)
        bump[k] -= 2 * eps
        fm = float(f(Tensor(bump.reshape(x0.shape))).data)
        fd = (fp - fm) / (2 * eps)
        err = abs(analytic[k] - fd) / (abs(analytic[k]) + 1e-8)
        worst = max(worst, err)
    return worst
