"""Numba-compiled leapfrog kernels; mirrors _kernels_numpy exactly."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _curl(ex, ey, hx, hy, C):
    nx, ny = C.shape
    for i in range(nx):
        for j in range(ny):
            C[i, j] = (ey[i + 1, j] - ey[i, j]) / hx - (ex[i, j + 1] - ex[i, j]) / hy


@njit(cache=True)
def _advance(ex, ey, ex_prev, ey_prev, ex_new, ey_new, s, eps0, hx, hy, dt2):
    nx = s.shape[0]
    ny = s.shape[1]
    for i in range(nx):
        for j in range(1, ny):
            ex_new[i, j] = (2.0 * ex[i, j] - ex_prev[i, j]
                            - dt2 * (s[i, j] - s[i, j - 1]) / (eps0 * hy))
    for i in range(1, nx):
        for j in range(ny):
            ey_new[i, j] = (2.0 * ey[i, j] - ey_prev[i, j]
                            + dt2 * (s[i, j] - s[i - 1, j]) / (eps0 * hx))


@njit(cache=True)
def _taylor_start(ex, ey, vx, vy, ex_new, ey_new, s, eps0, hx, hy, dt):
    nx = s.shape[0]
    ny = s.shape[1]
    half = 0.5 * dt * dt
    for i in range(nx):
        for j in range(1, ny):
            ex_new[i, j] = (ex[i, j] + dt * vx[i, j]
                            - half * (s[i, j] - s[i, j - 1]) / (eps0 * hy))
    for i in range(1, nx):
        for j in range(ny):
            ey_new[i, j] = (ey[i, j] + dt * vy[i, j]
                            + half * (s[i, j] - s[i - 1, j]) / (eps0 * hx))


@njit(cache=True)
def _set_bc(ex, ey, bcb, bct, bcl, bcr, n):
    nx = ex.shape[0]
    ny = ey.shape[1]
    for i in range(nx):
        ex[i, 0] = bcb[n, i]
        ex[i, ny] = bct[n, i]
    for j in range(ny):
        ey[0, j] = bcl[n, j]
        ey[nx, j] = bcr[n, j]


@njit(cache=True)
def _extract_trace(C, trace, n, nx, ny):
    for i in range(nx):
        trace[n, i] = 1.5 * C[i, 0] - 0.5 * C[i, 1]
        trace[n, nx + ny + i] = 1.5 * C[i, ny - 1] - 0.5 * C[i, ny - 2]
    for j in range(ny):
        trace[n, nx + j] = 1.5 * C[nx - 1, j] - 0.5 * C[nx - 2, j]
        trace[n, 2 * nx + ny + j] = 1.5 * C[0, j] - 0.5 * C[1, j]


@njit(cache=True)
def _energy_halfstep(ex, ey, ex_new, ey_new, C, Cn1, binv, eps0, hx, hy, dt):
    nx, ny = C.shape
    kin = 0.0
    for i in range(nx):
        for j in range(ny + 1):
            d = (ex_new[i, j] - ex[i, j]) / dt
            kin += d.real * d.real + d.imag * d.imag
    for i in range(nx + 1):
        for j in range(ny):
            d = (ey_new[i, j] - ey[i, j]) / dt
            kin += d.real * d.real + d.imag * d.imag
    mag = 0.0
    for i in range(nx):
        for j in range(ny):
            z = np.conj(Cn1[i, j]) * C[i, j]
            mag += binv[i, j] * z.real
    return 0.5 * eps0 * hx * hy * kin, 0.5 * hx * hy * mag


@njit(cache=True)
def run_wave(ex0, ey0, vx0, vy0, binv, eps0, hx, hy, dt, nsteps,
             bcb, bct, bcl, bcr,
             trace, record_trace,
             energy, record_energy,
             snaps, snap_stride, wi0, wi1, wj0, wj1,
             exN, eyN, exNm1, eyNm1):
    nx, ny = binv.shape
    ex = ex0.copy()
    ey = ey0.copy()
    ex_prev = np.empty_like(ex)
    ey_prev = np.empty_like(ey)
    ex_new = np.empty_like(ex)
    ey_new = np.empty_like(ey)
    C = np.empty((nx, ny), dtype=np.complex128)
    Cn1 = np.empty((nx, ny), dtype=np.complex128)
    s = np.empty((nx, ny), dtype=np.complex128)

    _curl(ex, ey, hx, hy, C)
    if record_trace:
        _extract_trace(C, trace, 0, nx, ny)
    if snap_stride > 0:
        snaps[0] = C[wi0:wi1, wj0:wj1]

    for i in range(nx):
        for j in range(ny):
            s[i, j] = binv[i, j] * C[i, j]
    _taylor_start(ex, ey, vx0, vy0, ex_new, ey_new, s, eps0, hx, hy, dt)
    _set_bc(ex_new, ey_new, bcb, bct, bcl, bcr, 1)
    if record_energy:
        _curl(ex_new, ey_new, hx, hy, Cn1)
        kin, mag = _energy_halfstep(ex, ey, ex_new, ey_new, C, Cn1, binv, eps0, hx, hy, dt)
        energy[0, 0] = kin
        energy[0, 1] = mag
    for i in range(nx):
        for j in range(ny + 1):
            ex_prev[i, j] = ex[i, j]
            ex[i, j] = ex_new[i, j]
    for i in range(nx + 1):
        for j in range(ny):
            ey_prev[i, j] = ey[i, j]
            ey[i, j] = ey_new[i, j]

    dt2 = dt * dt
    for n in range(1, nsteps):
        _curl(ex, ey, hx, hy, C)
        if record_trace:
            _extract_trace(C, trace, n, nx, ny)
        if snap_stride > 0 and n % snap_stride == 0:
            snaps[n // snap_stride] = C[wi0:wi1, wj0:wj1]
        for i in range(nx):
            for j in range(ny):
                s[i, j] = binv[i, j] * C[i, j]
        _advance(ex, ey, ex_prev, ey_prev, ex_new, ey_new, s, eps0, hx, hy, dt2)
        _set_bc(ex_new, ey_new, bcb, bct, bcl, bcr, n + 1)
        if record_energy:
            _curl(ex_new, ey_new, hx, hy, Cn1)
            kin, mag = _energy_halfstep(ex, ey, ex_new, ey_new, C, Cn1, binv, eps0, hx, hy, dt)
            energy[n, 0] = kin
            energy[n, 1] = mag
        for i in range(nx):
            for j in range(ny + 1):
                ex_prev[i, j] = ex[i, j]
                ex[i, j] = ex_new[i, j]
        for i in range(nx + 1):
            for j in range(ny):
                ey_prev[i, j] = ey[i, j]
                ey[i, j] = ey_new[i, j]
        if n % 256 == 0:
            v = ex[nx // 2, ny // 2]
            if not (np.isfinite(v.real) and np.isfinite(v.imag)):
                return 1

    _curl(ex, ey, hx, hy, C)
    if record_trace:
        _extract_trace(C, trace, nsteps, nx, ny)
    if snap_stride > 0 and nsteps % snap_stride == 0:
        k = nsteps // snap_stride
        if k < snaps.shape[0]:
            snaps[k] = C[wi0:wi1, wj0:wj1]

    exN[:, :] = ex
    eyN[:, :] = ey
    exNm1[:, :] = ex_prev
    eyNm1[:, :] = ey_prev
    ok = True
    for i in range(nx):
        for j in range(ny + 1):
            if not (np.isfinite(ex[i, j].real) and np.isfinite(ex[i, j].imag)):
                ok = False
    return 0 if ok else 1


@njit(cache=True)
def run_wave_dual(lam_x, lam_y, lamv_x, lamv_y, binv, eps0, hx, hy, dt, nsteps,
                  dual):
    nx, ny = binv.shape
    q_x = np.empty_like(lam_x)
    q_y = np.empty_like(lam_y)
    qm_x = np.empty_like(lam_x)
    qm_y = np.empty_like(lam_y)
    for i in range(nx):
        for j in range(ny + 1):
            q_x[i, j] = lam_x[i, j] + lamv_x[i, j] / dt
            qm_x[i, j] = lamv_x[i, j] / dt
    for i in range(nx + 1):
        for j in range(ny):
            q_y[i, j] = lam_y[i, j] + lamv_y[i, j] / dt
            qm_y[i, j] = lamv_y[i, j] / dt
    for i in range(nx):
        q_x[i, 0] = 0.0
        q_x[i, ny] = 0.0
        qm_x[i, 0] = 0.0
        qm_x[i, ny] = 0.0
    for j in range(ny):
        q_y[0, j] = 0.0
        q_y[nx, j] = 0.0
        qm_y[0, j] = 0.0
        qm_y[nx, j] = 0.0

    q_new_x = np.empty_like(q_x)
    q_new_y = np.empty_like(q_y)
    C = np.empty((nx, ny), dtype=np.complex128)
    s = np.empty((nx, ny), dtype=np.complex128)
    dt2 = dt * dt

    for m in range(0, nsteps - 1):
        _curl(q_x, q_y, hx, hy, C)
        n = nsteps - 1 - m
        for i in range(nx):
            dual[n, i] = binv[i, 0] * C[i, 0] / hy
            dual[n, nx + ny + i] = -binv[i, ny - 1] * C[i, ny - 1] / hy
        for j in range(ny):
            dual[n, nx + j] = binv[nx - 1, j] * C[nx - 1, j] / hx
            dual[n, 2 * nx + ny + j] = -binv[0, j] * C[0, j] / hx
        for i in range(nx):
            for j in range(ny):
                s[i, j] = binv[i, j] * C[i, j]
        _advance(q_x, q_y, qm_x, qm_y, q_new_x, q_new_y, s, eps0, hx, hy, dt2)
        for i in range(nx):
            q_new_x[i, 0] = 0.0
            q_new_x[i, ny] = 0.0
        for j in range(ny):
            q_new_y[0, j] = 0.0
            q_new_y[nx, j] = 0.0
        for i in range(nx):
            for j in range(ny + 1):
                qm_x[i, j] = q_x[i, j]
                q_x[i, j] = q_new_x[i, j]
        for i in range(nx + 1):
            for j in range(ny):
                qm_y[i, j] = q_y[i, j]
                q_y[i, j] = q_new_y[i, j]
    return 0


@njit(cache=True)
def run_wave_vs_ref(ex0, ey0, vx0, vy0, binv, eps0, hx, hy, dt, nsteps,
                    bcb, bct, bcl, bcr,
                    ref_ex, ref_ey, ref_c, omega,
                    errs):
    nx, ny = binv.shape
    ex = ex0.copy()
    ey = ey0.copy()
    ex_prev = np.empty_like(ex)
    ey_prev = np.empty_like(ey)
    ex_new = np.empty_like(ex)
    ey_new = np.empty_like(ey)
    C = np.empty((nx, ny), dtype=np.complex128)
    s = np.empty((nx, ny), dtype=np.complex128)
    area = hx * hy

    ph = 1.0 + 0.0j
    _curl(ex, ey, hx, hy, C)
    acc = 0.0
    for i in range(nx):
        for j in range(ny + 1):
            d = ex[i, j] - ref_ex[i, j] * ph
            acc += d.real * d.real + d.imag * d.imag
    for i in range(nx + 1):
        for j in range(ny):
            d = ey[i, j] - ref_ey[i, j] * ph
            acc += d.real * d.real + d.imag * d.imag
    errs[0, 0] = area * acc
    acc = 0.0
    for i in range(nx):
        for j in range(ny):
            d = C[i, j] - ref_c[i, j] * ph
            acc += d.real * d.real + d.imag * d.imag
    errs[0, 1] = area * acc

    for i in range(nx):
        for j in range(ny):
            s[i, j] = binv[i, j] * C[i, j]
    _taylor_start(ex, ey, vx0, vy0, ex_new, ey_new, s, eps0, hx, hy, dt)
    _set_bc(ex_new, ey_new, bcb, bct, bcl, bcr, 1)

    dref = -1j * omega
    ph_half = np.exp(-1j * omega * 0.5 * dt)
    acc = 0.0
    for i in range(nx):
        for j in range(ny + 1):
            d = (ex_new[i, j] - ex[i, j]) / dt - dref * ref_ex[i, j] * ph_half
            acc += d.real * d.real + d.imag * d.imag
    for i in range(nx + 1):
        for j in range(ny):
            d = (ey_new[i, j] - ey[i, j]) / dt - dref * ref_ey[i, j] * ph_half
            acc += d.real * d.real + d.imag * d.imag
    errs[1, 2] = area * acc

    for i in range(nx):
        for j in range(ny + 1):
            ex_prev[i, j] = ex[i, j]
            ex[i, j] = ex_new[i, j]
    for i in range(nx + 1):
        for j in range(ny):
            ey_prev[i, j] = ey[i, j]
            ey[i, j] = ey_new[i, j]

    dt2 = dt * dt
    for n in range(1, nsteps):
        ph = np.exp(-1j * omega * n * dt)
        _curl(ex, ey, hx, hy, C)
        acc = 0.0
        for i in range(nx):
            for j in range(ny + 1):
                d = ex[i, j] - ref_ex[i, j] * ph
                acc += d.real * d.real + d.imag * d.imag
        for i in range(nx + 1):
            for j in range(ny):
                d = ey[i, j] - ref_ey[i, j] * ph
                acc += d.real * d.real + d.imag * d.imag
        errs[n, 0] = area * acc
        acc = 0.0
        for i in range(nx):
            for j in range(ny):
                d = C[i, j] - ref_c[i, j] * ph
                acc += d.real * d.real + d.imag * d.imag
        errs[n, 1] = area * acc

        for i in range(nx):
            for j in range(ny):
                s[i, j] = binv[i, j] * C[i, j]
        _advance(ex, ey, ex_prev, ey_prev, ex_new, ey_new, s, eps0, hx, hy, dt2)
        _set_bc(ex_new, ey_new, bcb, bct, bcl, bcr, n + 1)
        ph_half = np.exp(-1j * omega * (n + 0.5) * dt)
        acc = 0.0
        for i in range(nx):
            for j in range(ny + 1):
                d = (ex_new[i, j] - ex[i, j]) / dt - dref * ref_ex[i, j] * ph_half
                acc += d.real * d.real + d.imag * d.imag
        for i in range(nx + 1):
            for j in range(ny):
                d = (ey_new[i, j] - ey[i, j]) / dt - dref * ref_ey[i, j] * ph_half
                acc += d.real * d.real + d.imag * d.imag
        errs[n + 1, 2] = area * acc

        for i in range(nx):
            for j in range(ny + 1):
                ex_prev[i, j] = ex[i, j]
                ex[i, j] = ex_new[i, j]
        for i in range(nx + 1):
            for j in range(ny):
                ey_prev[i, j] = ey[i, j]
                ey[i, j] = ey_new[i, j]

    ph = np.exp(-1j * omega * nsteps * dt)
    _curl(ex, ey, hx, hy, C)
    acc = 0.0
    for i in range(nx):
        for j in range(ny + 1):
            d = ex[i, j] - ref_ex[i, j] * ph
            acc += d.real * d.real + d.imag * d.imag
    for i in range(nx + 1):
        for j in range(ny):
            d = ey[i, j] - ref_ey[i, j] * ph
            acc += d.real * d.real + d.imag * d.imag
    errs[nsteps, 0] = area * acc
    acc = 0.0
    for i in range(nx):
        for j in range(ny):
            d = C[i, j] - ref_c[i, j] * ph
            acc += d.real * d.real + d.imag * d.imag
    errs[nsteps, 1] = area * acc
    return 0
