"""Numba kernels for the hot paths: network evaluation, RK4 rollout and
training residuals.

The kernels mirror :func:`fsnn.model.model_derivs` (same parameter layout;
summation order differs from numpy's dot, so agreement is to rounding, not
bit-exact). Training and Monte Carlo use these, everything else uses the
plain code.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .model import GeneratedModel, param_count

__all__ = ["CompiledModelShape", "compile_shape"]


@njit(cache=True)
def _net_derivs(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
                s, buf_a, buf_b, out):
    pos = 0
    n = out.shape[0]
    for i in range(n):
        nsrc = src_ptr[i + 1] - src_ptr[i]
        for k in range(nsrc):
            j = src_flat[src_ptr[i] + k]
            buf_a[k] = s[j] / mags[j]
        width = nsrc
        for li in range(widths_ptr[i], widths_ptr[i + 1]):
            nout = widths_flat[li]
            for o in range(nout):
                acc = 0.0
                for k in range(width):
                    acc += theta[pos] * buf_a[k]
                    pos += 1
                buf_b[o] = acc
            for o in range(nout):
                buf_b[o] = np.tanh(buf_b[o] + theta[pos])
                pos += 1
                buf_a[o] = buf_b[o]
            width = nout
        out[i] = buf_a[0] * mags[i]


@njit(cache=True)
def _rollout(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
             init, dt, n_steps, stride, include_t0, out):
    n = init.shape[0]
    maxw = out.shape[1]  # unused sizing guard; buffers sized by caller shape
    s = init.copy()
    buf_a = np.empty(64)
    buf_b = np.empty(64)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    row = 0
    if include_t0:
        for k in range(n):
            out[row, k] = s[k]
        row += 1
    for st in range(n_steps):
        _net_derivs(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
                    s, buf_a, buf_b, k1)
        for k in range(n):
            tmp[k] = s[k] + 0.5 * dt * k1[k]
        _net_derivs(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
                    tmp, buf_a, buf_b, k2)
        for k in range(n):
            tmp[k] = s[k] + 0.5 * dt * k2[k]
        _net_derivs(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
                    tmp, buf_a, buf_b, k3)
        for k in range(n):
            tmp[k] = s[k] + dt * k3[k]
        _net_derivs(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
                    tmp, buf_a, buf_b, k4)
        ok = True
        for k in range(n):
            s[k] = s[k] + (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            if not np.isfinite(s[k]):
                ok = False
        if not ok:
            return False
        if (st + 1) % stride == 0:
            for k in range(n):
                out[row, k] = s[k]
            row += 1
    return True


@njit(cache=True)
def _residuals(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
               inits, data, dt, stride, work, out):
    n_sets = inits.shape[0]
    n_rows = data.shape[1]
    n = inits.shape[1]
    idx = 0
    for d in range(n_sets):
        ok = _rollout(theta, widths_flat, widths_ptr, src_flat, src_ptr, mags,
                      inits[d], dt, n_rows * stride, stride, False, work)
        if not ok:
            return False
        for r in range(n_rows):
            for k in range(n):
                out[idx] = work[r, k] - data[d, r, k]
                idx += 1
    return True


class CompiledModelShape:
    """Flattened architecture/mask/scaling arrays ready for the kernels."""

    def __init__(self, architecture, mask, scaling):
        n = architecture.n_states
        widths_flat = []
        widths_ptr = [0]
        src_flat = []
        src_ptr = [0]
        for i in range(n):
            widths_flat.extend(architecture.hidden_layers[i])
            widths_flat.append(1)
            widths_ptr.append(len(widths_flat))
            src_flat.extend(int(j) for j in mask.sources_for(i))
            src_ptr.append(len(src_flat))
        max_width = max([1] + widths_flat + [n])
        if max_width > 64:
            raise ValueError("kernel buffers support layer widths up to 64")
        self.n_states = n
        self.architecture = architecture
        self.mask = mask
        self.scaling = scaling
        self.widths_flat = np.asarray(widths_flat, dtype=np.int64)
        self.widths_ptr = np.asarray(widths_ptr, dtype=np.int64)
        self.src_flat = np.asarray(src_flat, dtype=np.int64)
        self.src_ptr = np.asarray(src_ptr, dtype=np.int64)
        self.mags = np.asarray(scaling.magnitudes, dtype=float)
        self.n_params = param_count(architecture, mask)

    def derivs(self, theta, s):
        out = np.empty(self.n_states)
        buf_a = np.empty(64)
        buf_b = np.empty(64)
        _net_derivs(theta, self.widths_flat, self.widths_ptr, self.src_flat,
                    self.src_ptr, self.mags, np.asarray(s, dtype=float),
                    buf_a, buf_b, out)
        return out

    def rollout(self, theta, init, dt, n_steps, stride, include_t0=False):
        """Sampled trajectory rows, or None when the rollout went non-finite."""
        n_rows = n_steps // stride + (1 if include_t0 else 0)
        out = np.empty((n_rows, self.n_states))
        ok = _rollout(theta, self.widths_flat, self.widths_ptr, self.src_flat,
                      self.src_ptr, self.mags, np.asarray(init, dtype=float),
                      dt, n_steps, stride, include_t0, out)
        return out if ok else None

    def residuals(self, theta, inits, data, dt, stride):
        """Flat residual vector (model minus data) across datasets, rows and
        states, or None on a diverged rollout."""
        inits = np.ascontiguousarray(inits, dtype=float)
        data = np.ascontiguousarray(data, dtype=float)
        work = np.empty((data.shape[1], self.n_states))
        out = np.empty(data.shape[0] * data.shape[1] * data.shape[2])
        ok = _residuals(theta, self.widths_flat, self.widths_ptr,
                        self.src_flat, self.src_ptr, self.mags, inits, data,
                        dt, stride, work, out)
        return out if ok else None


def compile_shape(model_or_arch, mask=None, scaling=None) -> CompiledModelShape:
    if isinstance(model_or_arch, GeneratedModel):
        m = model_or_arch
        return CompiledModelShape(m.architecture, m.mask, m.scaling)
    return CompiledModelShape(model_or_arch, mask, scaling)
