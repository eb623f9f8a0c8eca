"""Sixth-order Magnus propagation of the radial Dirac system.

In x = ln r the radial equations for u = (G, F) read

    du/dx = M(x) u,   M = [[-kappa, r (E - V + 1)], [-r (E - V - 1), kappa]],

with traceless M.  Each interval step is the exponential of a traceless
2x2 matrix, so every step propagator is unimodular and Wronskians of
solution pairs are conserved to rounding error.  Propagators are stored
with their exponential growth factored out (``log_scale``) so that
strongly growing solutions at imaginary energies never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQ15 = np.sqrt(15.0)
_GAUSS3 = np.array([0.5 - _SQ15 / 10.0, 0.5, 0.5 + _SQ15 / 10.0])


def _comm(a, b):
    return a @ b - b @ a


def _expm_traceless(om):
    """exp of traceless 2x2 matrices (last two axes), scaled by exp(-|Re sqrt q|)."""
    a = om[..., 0, 0]
    q = a * a + om[..., 0, 1] * om[..., 1, 0]
    sq = np.sqrt(q.astype(complex))
    grow = np.abs(sq.real)
    e_p = np.exp(sq - grow)
    e_m = np.exp(-sq - grow)
    ch = 0.5 * (e_p + e_m)
    small = np.abs(sq) < 1e-6
    safe = np.where(small, 1.0, sq)
    sh = np.where(small, (1.0 + q / 6.0) * np.exp(-grow), 0.5 * (e_p - e_m) / safe)
    if not np.iscomplexobj(om):
        ch = ch.real
        sh = sh.real
    out = sh[..., None, None] * om
    out[..., 0, 0] += ch
    out[..., 1, 1] += ch
    return out, grow


def dirac_matrix(r, kappa, energy, v):
    """r * (radial Dirac generator) at radii r; broadcasting over energy."""
    r = np.asarray(r)
    e = np.asarray(energy)
    rr = r[..., None] if e.ndim else r
    vv = v[..., None] if e.ndim else v
    dt = np.result_type(rr, e, vv)
    m = np.empty(np.broadcast(rr, e).shape + (2, 2), dtype=dt)
    m[..., 0, 0] = -kappa
    m[..., 1, 1] = kappa
    m[..., 0, 1] = rr * (e - vv + 1.0)
    m[..., 1, 0] = -rr * (e - vv - 1.0)
    return m


@dataclass
class StepPropagators:
    """Scaled interval propagators: true P_i = exp(log_scale_i) * mats_i."""

    mats: np.ndarray  # (n-1, ..., 2, 2)
    log_scale: np.ndarray  # (n-1, ...)


def step_propagators(r_nodes, kappa, energy, potential) -> StepPropagators:
    """Magnus-6 propagators between consecutive radial nodes.

    ``potential`` is a callable V(r); ``energy`` may be a scalar or a 1-d
    array (the batch axis follows the interval axis).
    """
    x = np.log(r_nodes)
    h = np.diff(x)
    xg = x[:-1, None] + h[:, None] * _GAUSS3[None, :]
    rg = np.exp(xg)
    vg = np.asarray(potential(rg.ravel())).reshape(rg.shape)
    e = np.asarray(energy)
    if e.ndim:
        hh = h[:, None, None, None]
    else:
        hh = h[:, None, None]
    a1 = hh * dirac_matrix(rg[:, 0], kappa, e, vg[:, 0])
    a2 = hh * dirac_matrix(rg[:, 1], kappa, e, vg[:, 1])
    a3 = hh * dirac_matrix(rg[:, 2], kappa, e, vg[:, 2])
    al1 = a2
    al2 = (_SQ15 / 3.0) * (a3 - a1)
    al3 = (10.0 / 3.0) * (a3 - 2.0 * a2 + a1)
    c1 = _comm(al1, al2)
    c2 = -(1.0 / 60.0) * _comm(al1, 2.0 * al3 + c1)
    om = al1 + al3 / 12.0 + (1.0 / 240.0) * _comm(-20.0 * al1 - al3 + c1, al2 + c2)
    mats, grow = _expm_traceless(om)
    return StepPropagators(mats, grow)


def propagate(props: StepPropagators, u_start, start: int, stop: int):
    """Carry a solution from node ``start`` to node ``stop`` (either direction).

    Returns (directions, log_norms) for nodes between start and stop in
    node order, where the solution equals directions * exp(log_norms) and
    directions have unit Euclidean norm (complex modulus for complex u).
    """
    mats = props.mats
    logs = props.log_scale
    u = np.array(u_start, dtype=np.result_type(mats, np.asarray(u_start)))
    nrm = np.sqrt(np.sum(np.abs(u) ** 2, axis=-1))
    u = u / nrm[..., None]
    acc = np.log(nrm)
    step = 1 if stop >= start else -1
    count = abs(stop - start) + 1
    dirs = np.empty((count,) + u.shape, dtype=u.dtype)
    lns = np.empty((count,) + acc.shape)
    dirs[0], lns[0] = u, acc
    if u.shape == (2,) and u.dtype.kind == "f":
        return _propagate_scalar(mats, logs, dirs, lns, start, stop)
    if step == -1:
        # inverse of a unimodular matrix is its adjugate; the scale factor is unchanged
        inv = np.empty_like(mats[min(stop, start):max(stop, start)])
        sub = mats[min(stop, start):max(stop, start)]
        inv[..., 0, 0] = sub[..., 1, 1]
        inv[..., 1, 1] = sub[..., 0, 0]
        inv[..., 0, 1] = -sub[..., 0, 1]
        inv[..., 1, 0] = -sub[..., 1, 0]
        offset = min(stop, start)
    for k in range(1, count):
        if step == 1:
            i = start + k - 1
            m = mats[i]
            s = logs[i]
        else:
            i = start - k
            m = inv[i - offset]
            s = logs[i]
        u = np.einsum("...ij,...j->...i", m, u)
        nrm = np.sqrt(np.sum(np.abs(u) ** 2, axis=-1))
        u = u / nrm[..., None]
        acc = acc + s + np.log(nrm)
        dirs[k], lns[k] = u, acc
    if step == -1:
        dirs = dirs[::-1]
        lns = lns[::-1]
    return dirs, lns


def _propagate_scalar(mats, logs, dirs, lns, start: int, stop: int):
    """Plain-float version of :func:`propagate` for a single real solution."""
    lo, hi = min(start, stop), max(start, stop)
    m = mats[lo:hi].reshape(-1, 4).tolist()
    s = logs[lo:hi].tolist()
    g, f = float(dirs[0, 0]), float(dirs[0, 1])
    acc = float(lns[0])
    count = hi - lo + 1
    out_g = [0.0] * count
    out_f = [0.0] * count
    out_l = [0.0] * count
    out_g[0], out_f[0], out_l[0] = g, f, acc
    forward = stop >= start
    sqrt, log = math.sqrt, math.log
    for k in range(1, count):
        if forward:
            a, b, c, d = m[k - 1]
            sk = s[k - 1]
            g, f = a * g + b * f, c * g + d * f
        else:
            # inverse of a unimodular matrix is its adjugate
            a, b, c, d = m[hi - lo - k]
            sk = s[hi - lo - k]
            g, f = d * g - b * f, -c * g + a * f
        nrm = sqrt(g * g + f * f)
        g, f = g / nrm, f / nrm
        acc += sk + log(nrm)
        out_g[k], out_f[k], out_l[k] = g, f, acc
    dirs = np.column_stack([out_g, out_f])
    lns = np.array(out_l)
    if not forward:
        dirs, lns = dirs[::-1], lns[::-1]
    return dirs, lns
