# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Render kernel: delta-tracked volumetric path tracing over a classified
CT volume.

Written in Cython pure-python mode: this module runs as ordinary Python
(the fallback kernel) and compiles unchanged into cinevol._kernel_c for
production speed.  All randomness is counter-based (splitmix64 streams
keyed by seed/pixel/pass), so results are independent of scheduling and
thread count, and identical between the compiled and interpreted kernels.

Scene data arrives as flat numpy arrays packed by cinevol.tracer:

I (int64):   0 nx, 1 ny, 2 nz, 3 lut_n, 4 n_clips, 5 n_lights, 6 bg_mode,
             7 cube_res, 8 max_bounces, 9 width, 10 height, 11 ortho,
             12 has_cut, 13 cx, 14 cy, 15 cz (majorant cells), 16 write_aux
D (double):  0-2 spacing, 3-5 origin, 6 lut_lo, 7 lut_hi, 8-10 bg const rgb,
             11 unused, 12 g_min, 13-15 cam pos, 16-18 cam right,
             19-21 cam up, 22-24 cam fwd, 25 tan_x / ortho half-w,
             26 tan_y / ortho half-h, 27 metallic, 28 roughness,
             29 specular, 30-32 aabb lo, 33-35 aabb hi, 36-38 cell size mm
bg_mode: 0 disabled, 1 constant, 2 cubemap.
"""

import cython
from cython.parallel import prange

if cython.compiled:
    from cython.cimports.libc.math import (  # type: ignore
        acos, atan2, cos, exp, fabs, floor, log, sin, sqrt,
    )
else:
    from math import acos, atan2, cos, exp, fabs, floor, log, sin, sqrt

# --- typed constants ---------------------------------------------------------

M64 = cython.declare(cython.ulonglong, 0xFFFFFFFFFFFFFFFF)
SM_GAMMA = cython.declare(cython.ulonglong, 0x9E3779B97F4A7C15)
SM_MIX1 = cython.declare(cython.ulonglong, 0xBF58476D1CE4E5B9)
SM_MIX2 = cython.declare(cython.ulonglong, 0x94D049BB133111EB)
SEED_SALT = cython.declare(cython.ulonglong, 0x5851F42D4C957F2D)
PASS_SALT = cython.declare(cython.ulonglong, 0xD1342543DE82EF95)
JITTER_SALT = cython.declare(cython.ulonglong, 0x2545F4914F6CDD1D)

INV53 = cython.declare(cython.double, 1.0 / 9007199254740992.0)
PI = cython.declare(cython.double, 3.141592653589793)
TWO_PI = cython.declare(cython.double, 6.283185307179586)
FOUR_PI = cython.declare(cython.double, 12.566370614359172)
INV_FOUR_PI = cython.declare(cython.double, 0.07957747154594767)
HU_AIR = cython.declare(cython.double, -1024.0)
BIG = cython.declare(cython.double, 1e30)
ALPHA_MIN = cython.declare(cython.double, 1e-3)

# int-array slots
I_NX = cython.declare(cython.Py_ssize_t, 0)
I_NY = cython.declare(cython.Py_ssize_t, 1)
I_NZ = cython.declare(cython.Py_ssize_t, 2)
I_LUTN = cython.declare(cython.Py_ssize_t, 3)
I_NCLIP = cython.declare(cython.Py_ssize_t, 4)
I_NLIGHT = cython.declare(cython.Py_ssize_t, 5)
I_BGMODE = cython.declare(cython.Py_ssize_t, 6)
I_CUBERES = cython.declare(cython.Py_ssize_t, 7)
I_MAXB = cython.declare(cython.Py_ssize_t, 8)
I_W = cython.declare(cython.Py_ssize_t, 9)
I_H = cython.declare(cython.Py_ssize_t, 10)
I_ORTHO = cython.declare(cython.Py_ssize_t, 11)
I_HASCUT = cython.declare(cython.Py_ssize_t, 12)
I_CX = cython.declare(cython.Py_ssize_t, 13)
I_CY = cython.declare(cython.Py_ssize_t, 14)
I_CZ = cython.declare(cython.Py_ssize_t, 15)
I_WRITEAUX = cython.declare(cython.Py_ssize_t, 16)

# double-array slots
D_SX = cython.declare(cython.Py_ssize_t, 0)
D_OX = cython.declare(cython.Py_ssize_t, 3)
D_LUTLO = cython.declare(cython.Py_ssize_t, 6)
D_LUTHI = cython.declare(cython.Py_ssize_t, 7)
D_BGR = cython.declare(cython.Py_ssize_t, 8)
D_GMIN = cython.declare(cython.Py_ssize_t, 12)
D_CPOS = cython.declare(cython.Py_ssize_t, 13)
D_CRIGHT = cython.declare(cython.Py_ssize_t, 16)
D_CUP = cython.declare(cython.Py_ssize_t, 19)
D_CFWD = cython.declare(cython.Py_ssize_t, 22)
D_TANX = cython.declare(cython.Py_ssize_t, 25)
D_TANY = cython.declare(cython.Py_ssize_t, 26)
D_MET = cython.declare(cython.Py_ssize_t, 27)
D_ROUGH = cython.declare(cython.Py_ssize_t, 28)
D_SPEC = cython.declare(cython.Py_ssize_t, 29)
D_ALO = cython.declare(cython.Py_ssize_t, 30)
D_AHI = cython.declare(cython.Py_ssize_t, 33)
D_CELL = cython.declare(cython.Py_ssize_t, 36)

# per-row scratch slots (wrk is (rows, 48))
S_CLS = cython.declare(cython.Py_ssize_t, 0)   # classified rgb
S_GRD = cython.declare(cython.Py_ssize_t, 3)   # gradient
S_WI = cython.declare(cython.Py_ssize_t, 6)    # sampled direction
S_RAD = cython.declare(cython.Py_ssize_t, 9)   # light radiance
S_F = cython.declare(cython.Py_ssize_t, 12)    # brdf value
S_OUT = cython.declare(cython.Py_ssize_t, 15)  # path radiance
S_NRM = cython.declare(cython.Py_ssize_t, 18)  # first-hit normal
S_TMP = cython.declare(cython.Py_ssize_t, 21)
S_RO = cython.declare(cython.Py_ssize_t, 24)   # ray origin
S_RD = cython.declare(cython.Py_ssize_t, 27)   # ray direction
S_LS = cython.declare(cython.Py_ssize_t, 30)   # light sample misc (dist, pdf)
WRK_W = cython.declare(cython.Py_ssize_t, 48)


# --- counter-based RNG -------------------------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def mix64(z: cython.ulonglong) -> cython.ulonglong:
    z = (z + SM_GAMMA) & M64
    z = ((z ^ (z >> 30)) * SM_MIX1) & M64
    z = ((z ^ (z >> 27)) * SM_MIX2) & M64
    return z ^ (z >> 31)


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def stream_base(seed: cython.ulonglong, pixel: cython.ulonglong,
                pass_index: cython.ulonglong) -> cython.ulonglong:
    b: cython.ulonglong = mix64(seed ^ SEED_SALT)
    b = mix64((b + pixel * SM_GAMMA) & M64)
    b = mix64((b + pass_index * PASS_SALT) & M64)
    return b


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def rnd(base: cython.ulonglong, ctr: cython.longlong[:, ::1],
        j: cython.Py_ssize_t) -> cython.double:
    """Next uniform in [0, 1) of row j's draw stream."""
    c: cython.longlong = ctr[j, 0]
    ctr[j, 0] = c + 1
    return (mix64((base + cython.cast(cython.ulonglong, c) * SM_GAMMA) & M64)
            >> 11) * INV53


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def halton(index: cython.ulonglong, b: cython.int) -> cython.double:
    f: cython.double = 1.0
    r: cython.double = 0.0
    i: cython.ulonglong = index
    while i > 0:
        f = f / b
        r = r + f * cython.cast(cython.double, i % b)
        i = i // b
    return r


# --- small vector helpers (scalar form) --------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def clampd(x: cython.double, lo: cython.double, hi: cython.double) -> cython.double:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def luminance(r: cython.double, g: cython.double, b: cython.double) -> cython.double:
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def ifloor(x: cython.double) -> cython.Py_ssize_t:
    return cython.cast(cython.Py_ssize_t, floor(x))


# --- volume sampling ---------------------------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def trilinear(vol: cython.float[::1], nx: cython.Py_ssize_t,
              ny: cython.Py_ssize_t, nz: cython.Py_ssize_t,
              ux: cython.double, uy: cython.double,
              uz: cython.double) -> cython.double:
    """Trilinear fetch at voxel coords (clamped); caller handles outside."""
    x0: cython.Py_ssize_t
    y0: cython.Py_ssize_t
    z0: cython.Py_ssize_t
    x1: cython.Py_ssize_t
    y1: cython.Py_ssize_t
    z1: cython.Py_ssize_t
    ux = clampd(ux, 0.0, nx - 1.0)
    uy = clampd(uy, 0.0, ny - 1.0)
    uz = clampd(uz, 0.0, nz - 1.0)
    x0 = ifloor(ux)
    y0 = ifloor(uy)
    z0 = ifloor(uz)
    if x0 > nx - 2:
        x0 = nx - 2
    if y0 > ny - 2:
        y0 = ny - 2
    if z0 > nz - 2:
        z0 = nz - 2
    if x0 < 0:
        x0 = 0
    if y0 < 0:
        y0 = 0
    if z0 < 0:
        z0 = 0
    fx: cython.double = ux - x0
    fy: cython.double = uy - y0
    fz: cython.double = uz - z0
    if nx == 1:
        fx = 0.0
    if ny == 1:
        fy = 0.0
    if nz == 1:
        fz = 0.0
    x1 = x0 + 1 if x0 + 1 < nx else nx - 1
    y1 = y0 + 1 if y0 + 1 < ny else ny - 1
    z1 = z0 + 1 if z0 + 1 < nz else nz - 1
    sxy: cython.Py_ssize_t = nx * ny
    c000: cython.double = vol[z0 * sxy + y0 * nx + x0]
    c100: cython.double = vol[z0 * sxy + y0 * nx + x1]
    c010: cython.double = vol[z0 * sxy + y1 * nx + x0]
    c110: cython.double = vol[z0 * sxy + y1 * nx + x1]
    c001: cython.double = vol[z1 * sxy + y0 * nx + x0]
    c101: cython.double = vol[z1 * sxy + y0 * nx + x1]
    c011: cython.double = vol[z1 * sxy + y1 * nx + x0]
    c111: cython.double = vol[z1 * sxy + y1 * nx + x1]
    c00: cython.double = c000 * (1 - fx) + c100 * fx
    c10: cython.double = c010 * (1 - fx) + c110 * fx
    c01: cython.double = c001 * (1 - fx) + c101 * fx
    c11: cython.double = c011 * (1 - fx) + c111 * fx
    c0: cython.double = c00 * (1 - fy) + c10 * fy
    c1: cython.double = c01 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def sample_hu(vol: cython.float[::1], I: cython.longlong[::1],
              D: cython.double[::1], x: cython.double, y: cython.double,
              z: cython.double) -> cython.double:
    """World-space HU sample; outside the voxel-center box returns air."""
    nx: cython.Py_ssize_t = I[I_NX]
    ny: cython.Py_ssize_t = I[I_NY]
    nz: cython.Py_ssize_t = I[I_NZ]
    ux: cython.double = (x - D[D_OX]) / D[D_SX]
    uy: cython.double = (y - D[D_OX + 1]) / D[D_SX + 1]
    uz: cython.double = (z - D[D_OX + 2]) / D[D_SX + 2]
    if (ux < 0.0 or ux > nx - 1.0 or uy < 0.0 or uy > ny - 1.0
            or uz < 0.0 or uz > nz - 1.0):
        return HU_AIR
    return trilinear(vol, nx, ny, nz, ux, uy, uz)


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def lut_index(I: cython.longlong[::1], D: cython.double[::1],
              hu: cython.double) -> cython.Py_ssize_t:
    n: cython.Py_ssize_t = I[I_LUTN]
    t: cython.double = (hu - D[D_LUTLO]) / (D[D_LUTHI] - D[D_LUTLO])
    idx: cython.Py_ssize_t = ifloor(t * (n - 1) + 0.5)
    if idx < 0:
        idx = 0
    if idx > n - 1:
        idx = n - 1
    return idx


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def is_clipped(clips: cython.double[:, ::1], nclip: cython.Py_ssize_t,
               x: cython.double, y: cython.double,
               z: cython.double) -> cython.int:
    k: cython.Py_ssize_t
    for k in range(nclip):
        if (x * clips[k, 0] + y * clips[k, 1] + z * clips[k, 2]
                > clips[k, 3]):
            return 1
    return 0


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def is_cut(cut: cython.uchar[::1], I: cython.longlong[::1],
           D: cython.double[::1], x: cython.double, y: cython.double,
           z: cython.double) -> cython.int:
    """Nearest-voxel membership in the cut mask."""
    if I[I_HASCUT] == 0:
        return 0
    nx: cython.Py_ssize_t = I[I_NX]
    ny: cython.Py_ssize_t = I[I_NY]
    nz: cython.Py_ssize_t = I[I_NZ]
    ix: cython.Py_ssize_t = ifloor((x - D[D_OX]) / D[D_SX] + 0.5)
    iy: cython.Py_ssize_t = ifloor((y - D[D_OX + 1]) / D[D_SX + 1] + 0.5)
    iz: cython.Py_ssize_t = ifloor((z - D[D_OX + 2]) / D[D_SX + 2] + 0.5)
    if ix < 0:
        ix = 0
    if iy < 0:
        iy = 0
    if iz < 0:
        iz = 0
    if ix > nx - 1:
        ix = nx - 1
    if iy > ny - 1:
        iy = ny - 1
    if iz > nz - 1:
        iz = nz - 1
    return 1 if cut[iz * nx * ny + iy * nx + ix] != 0 else 0


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def sigma_at(vol: cython.float[::1], cut: cython.uchar[::1],
             lut: cython.double[:, ::1], clips: cython.double[:, ::1],
             I: cython.longlong[::1], D: cython.double[::1],
             x: cython.double, y: cython.double,
             z: cython.double) -> cython.double:
    """Extinction at a world point; clipped/cut space is vacuum."""
    if is_clipped(clips, I[I_NCLIP], x, y, z) != 0:
        return 0.0
    if is_cut(cut, I, D, x, y, z) != 0:
        return 0.0
    hu: cython.double = sample_hu(vol, I, D, x, y, z)
    return lut[lut_index(I, D, hu), 3]


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def classify_at(vol: cython.float[::1], cut: cython.uchar[::1],
                lut: cython.double[:, ::1], clips: cython.double[:, ::1],
                I: cython.longlong[::1], D: cython.double[::1],
                x: cython.double, y: cython.double, z: cython.double,
                wrk: cython.double[:, ::1],
                j: cython.Py_ssize_t) -> cython.double:
    """Like sigma_at but also writes the classified color to wrk[S_CLS]."""
    hu: cython.double = sample_hu(vol, I, D, x, y, z)
    idx: cython.Py_ssize_t = lut_index(I, D, hu)
    wrk[j, S_CLS] = lut[idx, 0]
    wrk[j, S_CLS + 1] = lut[idx, 1]
    wrk[j, S_CLS + 2] = lut[idx, 2]
    if is_clipped(clips, I[I_NCLIP], x, y, z) != 0:
        return 0.0
    if is_cut(cut, I, D, x, y, z) != 0:
        return 0.0
    return lut[idx, 3]


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def gradient_at(vol: cython.float[::1], I: cython.longlong[::1],
                D: cython.double[::1], x: cython.double, y: cython.double,
                z: cython.double, wrk: cython.double[:, ::1],
                j: cython.Py_ssize_t) -> cython.double:
    """Central-difference HU gradient (HU/mm) into wrk[S_GRD]; returns |g|."""
    gx: cython.double = (sample_hu(vol, I, D, x + D[D_SX], y, z)
                         - sample_hu(vol, I, D, x - D[D_SX], y, z)) / (2.0 * D[D_SX])
    gy: cython.double = (sample_hu(vol, I, D, x, y + D[D_SX + 1], z)
                         - sample_hu(vol, I, D, x, y - D[D_SX + 1], z)) / (2.0 * D[D_SX + 1])
    gz: cython.double = (sample_hu(vol, I, D, x, y, z + D[D_SX + 2])
                         - sample_hu(vol, I, D, x, y, z - D[D_SX + 2])) / (2.0 * D[D_SX + 2])
    wrk[j, S_GRD] = gx
    wrk[j, S_GRD + 1] = gy
    wrk[j, S_GRD + 2] = gz
    return sqrt(gx * gx + gy * gy + gz * gz)


# --- majorant DDA tracking ---------------------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def aabb_clip(D: cython.double[::1], ox: cython.double, oy: cython.double,
              oz: cython.double, dx: cython.double, dy: cython.double,
              dz: cython.double, t_max: cython.double,
              wrk: cython.double[:, ::1], j: cython.Py_ssize_t) -> cython.int:
    """Clip [0, t_max] to the volume box; writes (t0, t1) to wrk[S_TMP..]."""
    t0: cython.double = 0.0
    t1: cython.double = t_max
    a: cython.Py_ssize_t
    o: cython.double
    d: cython.double
    lo: cython.double
    hi: cython.double
    ta: cython.double
    tb: cython.double
    tmp: cython.double
    for a in range(3):
        if a == 0:
            o = ox
            d = dx
        elif a == 1:
            o = oy
            d = dy
        else:
            o = oz
            d = dz
        lo = D[D_ALO + a]
        hi = D[D_AHI + a]
        if fabs(d) < 1e-12:
            if o < lo or o > hi:
                return 0
            continue
        ta = (lo - o) / d
        tb = (hi - o) / d
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    if t1 <= t0:
        return 0
    wrk[j, S_TMP] = t0
    wrk[j, S_TMP + 1] = t1
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def track(mode: cython.int, vol: cython.float[::1], cut: cython.uchar[::1],
          lut: cython.double[:, ::1], clips: cython.double[:, ::1],
          maj: cython.double[::1], I: cython.longlong[::1],
          D: cython.double[::1], ox: cython.double, oy: cython.double,
          oz: cython.double, dx: cython.double, dy: cython.double,
          dz: cython.double, t_max: cython.double,
          wrk: cython.double[:, ::1], ctr: cython.longlong[:, ::1],
          j: cython.Py_ssize_t, base: cython.ulonglong) -> cython.double:
    """Traverse the majorant cell grid along a ray segment [0, t_max].

    mode 0: delta tracking; returns the sampled collision distance, or -1
            if the segment escapes without a real collision.
    mode 1: ratio tracking; returns the transmittance estimate in [0, 1].
    """
    trans: cython.double = 1.0
    if aabb_clip(D, ox, oy, oz, dx, dy, dz, t_max, wrk, j) == 0:
        return -1.0 if mode == 0 else 1.0
    t0: cython.double = wrk[j, S_TMP]
    t1: cython.double = wrk[j, S_TMP + 1]
    cx: cython.Py_ssize_t = I[I_CX]
    cy: cython.Py_ssize_t = I[I_CY]
    cz: cython.Py_ssize_t = I[I_CZ]
    # cell grid origin: half a voxel before the first voxel center
    gx0: cython.double = D[D_ALO]
    gy0: cython.double = D[D_ALO + 1]
    gz0: cython.double = D[D_ALO + 2]
    cwx: cython.double = D[D_CELL]
    cwy: cython.double = D[D_CELL + 1]
    cwz: cython.double = D[D_CELL + 2]
    eps: cython.double = 1e-9 * (t1 - t0 + 1.0)
    px: cython.double = ox + (t0 + eps) * dx
    py: cython.double = oy + (t0 + eps) * dy
    pz: cython.double = oz + (t0 + eps) * dz
    ix: cython.Py_ssize_t = ifloor((px - gx0) / cwx)
    iy: cython.Py_ssize_t = ifloor((py - gy0) / cwy)
    iz: cython.Py_ssize_t = ifloor((pz - gz0) / cwz)
    if ix < 0:
        ix = 0
    if iy < 0:
        iy = 0
    if iz < 0:
        iz = 0
    if ix > cx - 1:
        ix = cx - 1
    if iy > cy - 1:
        iy = cy - 1
    if iz > cz - 1:
        iz = cz - 1
    stepx: cython.Py_ssize_t = 1 if dx >= 0 else -1
    stepy: cython.Py_ssize_t = 1 if dy >= 0 else -1
    stepz: cython.Py_ssize_t = 1 if dz >= 0 else -1
    tmaxx: cython.double = BIG
    tmaxy: cython.double = BIG
    tmaxz: cython.double = BIG
    tdx: cython.double = BIG
    tdy: cython.double = BIG
    tdz: cython.double = BIG
    nxt: cython.double
    if fabs(dx) > 1e-12:
        nxt = gx0 + (ix + (1 if stepx > 0 else 0)) * cwx
        tmaxx = (nxt - ox) / dx
        tdx = cwx / fabs(dx)
    if fabs(dy) > 1e-12:
        nxt = gy0 + (iy + (1 if stepy > 0 else 0)) * cwy
        tmaxy = (nxt - oy) / dy
        tdy = cwy / fabs(dy)
    if fabs(dz) > 1e-12:
        nxt = gz0 + (iz + (1 if stepz > 0 else 0)) * cwz
        tmaxz = (nxt - oz) / dz
        tdz = cwz / fabs(dz)
    t: cython.double = t0
    cell_end: cython.double
    m: cython.double
    sig: cython.double
    u: cython.double
    x: cython.double
    y: cython.double
    z: cython.double
    while True:
        cell_end = tmaxx
        if tmaxy < cell_end:
            cell_end = tmaxy
        if tmaxz < cell_end:
            cell_end = tmaxz
        if cell_end > t1:
            cell_end = t1
        m = maj[iz * cx * cy + iy * cx + ix]
        if m > 0.0:
            while True:
                u = rnd(base, ctr, j)
                t = t - log(1.0 - u) / m
                if t >= cell_end:
                    break
                x = ox + t * dx
                y = oy + t * dy
                z = oz + t * dz
                sig = sigma_at(vol, cut, lut, clips, I, D, x, y, z)
                if sig > m:
                    sig = m
                if mode == 0:
                    if rnd(base, ctr, j) * m < sig:
                        return t
                else:
                    trans = trans * (1.0 - sig / m)
                    if trans < 0.05:
                        # unbiased russian-roulette termination
                        if rnd(base, ctr, j) < 0.5:
                            return 0.0
                        trans = trans * 2.0
        # restart at the cell boundary (exponential memorylessness)
        t = cell_end
        if cell_end >= t1:
            break
        if tmaxx <= tmaxy and tmaxx <= tmaxz:
            ix = ix + stepx
            tmaxx = tmaxx + tdx
            if ix < 0 or ix > cx - 1:
                break
        elif tmaxy <= tmaxz:
            iy = iy + stepy
            tmaxy = tmaxy + tdy
            if iy < 0 or iy > cy - 1:
                break
        else:
            iz = iz + stepz
            tmaxz = tmaxz + tdz
            if iz < 0 or iz > cz - 1:
                break
    return -1.0 if mode == 0 else trans


# --- Disney-style BRDF (base color, metallic, roughness, specular) -----------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def ggx_alpha(roughness: cython.double) -> cython.double:
    a: cython.double = roughness * roughness
    return a if a > ALPHA_MIN else ALPHA_MIN


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def diffuse_norm(roughness: cython.double) -> cython.double:
    """Retro-factor normalization: unit hemispherical albedo at normal
    incidence (analytic: E(0, r) = 1 - 1/42 + 5 r / 84)."""
    return 1.0 / (1.0 - 1.0 / 42.0 + roughness * (5.0 / 84.0))


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def f0_channel(basec: cython.double, metallic: cython.double,
               specular: cython.double) -> cython.double:
    return 0.08 * specular * (1.0 - metallic) + basec * metallic


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def brdf_eval_s(br: cython.double, bg: cython.double, bb: cython.double,
                metallic: cython.double, roughness: cython.double,
                specular: cython.double, wox: cython.double,
                woy: cython.double, woz: cython.double, wix: cython.double,
                wiy: cython.double, wiz: cython.double, nx: cython.double,
                ny: cython.double, nz: cython.double,
                wrk: cython.double[:, ::1],
                j: cython.Py_ssize_t) -> cython.int:
    """BRDF value (per steradian) into wrk[S_F..]; 0 outside the hemisphere."""
    wrk[j, S_F] = 0.0
    wrk[j, S_F + 1] = 0.0
    wrk[j, S_F + 2] = 0.0
    nv: cython.double = wox * nx + woy * ny + woz * nz
    nl: cython.double = wix * nx + wiy * ny + wiz * nz
    if nv <= 1e-9 or nl <= 1e-9:
        return 0
    hx: cython.double = wox + wix
    hy: cython.double = woy + wiy
    hz: cython.double = woz + wiz
    hn: cython.double = sqrt(hx * hx + hy * hy + hz * hz)
    if hn < 1e-12:
        return 0
    hx = hx / hn
    hy = hy / hn
    hz = hz / hn
    nh: cython.double = nx * hx + ny * hy + nz * hz
    lh: cython.double = wix * hx + wiy * hy + wiz * hz
    alpha: cython.double = ggx_alpha(roughness)
    a2: cython.double = alpha * alpha
    dd: cython.double = nh * nh * (a2 - 1.0) + 1.0
    ndf: cython.double = a2 / (PI * dd * dd)
    # height-correlated Smith visibility (includes 1/(4 nl nv))
    lv: cython.double = nl * sqrt(nv * nv * (1.0 - a2) + a2)
    ll: cython.double = nv * sqrt(nl * nl * (1.0 - a2) + a2)
    vis: cython.double = 0.5 / (lv + ll) if (lv + ll) > 1e-12 else 0.0
    f0r: cython.double = f0_channel(br, metallic, specular)
    f0g: cython.double = f0_channel(bg, metallic, specular)
    f0b: cython.double = f0_channel(bb, metallic, specular)
    f90: cython.double = 50.0 * luminance(f0r, f0g, f0b)
    if f90 > 1.0:
        f90 = 1.0
    s5: cython.double = (1.0 - lh)
    s5 = s5 * s5 * s5 * s5 * s5
    fr_: cython.double = f0r + (f90 - f0r) * s5
    fg_: cython.double = f0g + (f90 - f0g) * s5
    fb_: cython.double = f0b + (f90 - f0b) * s5
    if fr_ < 0.0:
        fr_ = 0.0
    if fg_ < 0.0:
        fg_ = 0.0
    if fb_ < 0.0:
        fb_ = 0.0
    spec: cython.double = ndf * vis
    # Burley retro-reflection factor, normalized to unit albedo at
    # normal incidence; diffuse is scaled by the energy the specular
    # layer reflects away (average Fresnel).
    fd90: cython.double = 0.5 + 2.0 * roughness * lh * lh
    e5l: cython.double = (1.0 - nl)
    e5l = e5l * e5l * e5l * e5l * e5l
    e5v: cython.double = (1.0 - nv)
    e5v = e5v * e5v * e5v * e5v * e5v
    fd: cython.double = (1.0 + (fd90 - 1.0) * e5l) * (1.0 + (fd90 - 1.0) * e5v)
    dn: cython.double = diffuse_norm(roughness) / PI
    favg_r: cython.double = f0r + (f90 - f0r) / 21.0
    favg_g: cython.double = f0g + (f90 - f0g) / 21.0
    favg_b: cython.double = f0b + (f90 - f0b) / 21.0
    kd: cython.double = (1.0 - metallic) * fd * dn
    wrk[j, S_F] = br * kd * (1.0 - favg_r) + spec * fr_
    wrk[j, S_F + 1] = bg * kd * (1.0 - favg_g) + spec * fg_
    wrk[j, S_F + 2] = bb * kd * (1.0 - favg_b) + spec * fb_
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def spec_weight(br: cython.double, bg: cython.double, bb: cython.double,
                metallic: cython.double,
                specular: cython.double) -> cython.double:
    """Probability of picking the specular lobe in sample_brdf."""
    f0r: cython.double = f0_channel(br, metallic, specular)
    f0g: cython.double = f0_channel(bg, metallic, specular)
    f0b: cython.double = f0_channel(bb, metallic, specular)
    f90: cython.double = 50.0 * luminance(f0r, f0g, f0b)
    if f90 > 1.0:
        f90 = 1.0
    ks: cython.double = luminance(f0r + (f90 - f0r) / 21.0,
                                  f0g + (f90 - f0g) / 21.0,
                                  f0b + (f90 - f0b) / 21.0)
    kd: cython.double = ((1.0 - metallic) * (1.0 - ks)
                         * luminance(br, bg, bb))
    if ks + kd < 1e-12:
        return 0.5
    return ks / (ks + kd)


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def onb(nx: cython.double, ny: cython.double, nz: cython.double,
        wrk: cython.double[:, ::1], j: cython.Py_ssize_t) -> cython.int:
    """Orthonormal basis (t, b) for n into wrk[S_TMP..S_TMP+5] (Duff et al.)."""
    sign: cython.double = 1.0 if nz >= 0.0 else -1.0
    a: cython.double = -1.0 / (sign + nz)
    b: cython.double = nx * ny * a
    wrk[j, S_TMP] = 1.0 + sign * nx * nx * a
    wrk[j, S_TMP + 1] = sign * b
    wrk[j, S_TMP + 2] = -sign * nx
    wrk[j, S_TMP + 3] = b
    wrk[j, S_TMP + 4] = sign + ny * ny * a
    wrk[j, S_TMP + 5] = -ny
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def ggx_g1(nv: cython.double, a2: cython.double) -> cython.double:
    return 2.0 * nv / (nv + sqrt(a2 + (1.0 - a2) * nv * nv))


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def brdf_pdf_s(br: cython.double, bg: cython.double, bb: cython.double,
               metallic: cython.double, roughness: cython.double,
               specular: cython.double, wox: cython.double,
               woy: cython.double, woz: cython.double, wix: cython.double,
               wiy: cython.double, wiz: cython.double, nx: cython.double,
               ny: cython.double, nz: cython.double) -> cython.double:
    """Mixture pdf of sample_brdf (solid-angle measure)."""
    nv: cython.double = wox * nx + woy * ny + woz * nz
    nl: cython.double = wix * nx + wiy * ny + wiz * nz
    if nv <= 1e-9 or nl <= 0.0:
        return 0.0
    ps: cython.double = spec_weight(br, bg, bb, metallic, specular)
    pdf: cython.double = (1.0 - ps) * nl / PI
    if ps > 0.0:
        hx: cython.double = wox + wix
        hy: cython.double = woy + wiy
        hz: cython.double = woz + wiz
        hn: cython.double = sqrt(hx * hx + hy * hy + hz * hz)
        if hn > 1e-12:
            hx = hx / hn
            hy = hy / hn
            hz = hz / hn
            nh: cython.double = nx * hx + ny * hy + nz * hz
            if nh > 0.0:
                alpha: cython.double = ggx_alpha(roughness)
                a2: cython.double = alpha * alpha
                dd: cython.double = nh * nh * (a2 - 1.0) + 1.0
                ndf: cython.double = a2 / (PI * dd * dd)
                # VNDF pdf in wi: G1(wo) D / (4 (n.wo))
                pdf = pdf + ps * ggx_g1(nv, a2) * ndf / (4.0 * nv)
    return pdf


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def brdf_sample_s(br: cython.double, bg: cython.double, bb: cython.double,
                  metallic: cython.double, roughness: cython.double,
                  specular: cython.double, wox: cython.double,
                  woy: cython.double, woz: cython.double, nx: cython.double,
                  ny: cython.double, nz: cython.double, u1: cython.double,
                  u2: cython.double, lobe_u: cython.double,
                  wrk: cython.double[:, ::1],
                  j: cython.Py_ssize_t) -> cython.double:
    """Sample wi into wrk[S_WI..]; returns the mixture pdf (<= 0: invalid)."""
    nv: cython.double = wox * nx + woy * ny + woz * nz
    if nv <= 1e-9:
        return -1.0
    ps: cython.double = spec_weight(br, bg, bb, metallic, specular)
    onb(nx, ny, nz, wrk, j)
    tx: cython.double = wrk[j, S_TMP]
    ty: cython.double = wrk[j, S_TMP + 1]
    tz: cython.double = wrk[j, S_TMP + 2]
    bx: cython.double = wrk[j, S_TMP + 3]
    by: cython.double = wrk[j, S_TMP + 4]
    bz: cython.double = wrk[j, S_TMP + 5]
    wix: cython.double
    wiy: cython.double
    wiz: cython.double
    if lobe_u < ps:
        # GGX VNDF (Heitz 2018) in the local frame
        alpha: cython.double = ggx_alpha(roughness)
        vx: cython.double = wox * tx + woy * ty + woz * tz
        vy: cython.double = wox * bx + woy * by + woz * bz
        vz: cython.double = nv
        sx: cython.double = alpha * vx
        sy: cython.double = alpha * vy
        sz: cython.double = vz
        sn: cython.double = sqrt(sx * sx + sy * sy + sz * sz)
        sx = sx / sn
        sy = sy / sn
        sz = sz / sn
        lensq: cython.double = sx * sx + sy * sy
        t1x: cython.double
        t1y: cython.double
        t1z: cython.double
        if lensq > 1e-16:
            inv: cython.double = 1.0 / sqrt(lensq)
            t1x = -sy * inv
            t1y = sx * inv
            t1z = 0.0
        else:
            t1x = 1.0
            t1y = 0.0
            t1z = 0.0
        t2x: cython.double = sy * t1z - sz * t1y
        t2y: cython.double = sz * t1x - sx * t1z
        t2z: cython.double = sx * t1y - sy * t1x
        r_: cython.double = sqrt(u1)
        phi: cython.double = TWO_PI * u2
        p1: cython.double = r_ * cos(phi)
        p2: cython.double = r_ * sin(phi)
        s_: cython.double = 0.5 * (1.0 + sz)
        p2 = (1.0 - s_) * sqrt(1.0 - p1 * p1) + s_ * p2
        p3: cython.double = sqrt(clampd(1.0 - p1 * p1 - p2 * p2, 0.0, 1.0))
        mhx: cython.double = p1 * t1x + p2 * t2x + p3 * sx
        mhy: cython.double = p1 * t1y + p2 * t2y + p3 * sy
        mhz: cython.double = p1 * t1z + p2 * t2z + p3 * sz
        hx: cython.double = alpha * mhx
        hy: cython.double = alpha * mhy
        hz: cython.double = mhz if mhz > 1e-9 else 1e-9
        hnorm: cython.double = sqrt(hx * hx + hy * hy + hz * hz)
        hx = hx / hnorm
        hy = hy / hnorm
        hz = hz / hnorm
        # back to world
        whx: cython.double = hx * tx + hy * bx + hz * nx
        why: cython.double = hx * ty + hy * by + hz * ny
        whz: cython.double = hx * tz + hy * bz + hz * nz
        voh: cython.double = wox * whx + woy * why + woz * whz
        wix = 2.0 * voh * whx - wox
        wiy = 2.0 * voh * why - woy
        wiz = 2.0 * voh * whz - woz
    else:
        # cosine-weighted hemisphere
        r_2: cython.double = sqrt(u1)
        phi2: cython.double = TWO_PI * u2
        lx: cython.double = r_2 * cos(phi2)
        ly: cython.double = r_2 * sin(phi2)
        lz: cython.double = sqrt(clampd(1.0 - u1, 0.0, 1.0))
        wix = lx * tx + ly * bx + lz * nx
        wiy = lx * ty + ly * by + lz * ny
        wiz = lx * tz + ly * bz + lz * nz
    wrk[j, S_WI] = wix
    wrk[j, S_WI + 1] = wiy
    wrk[j, S_WI + 2] = wiz
    if wix * nx + wiy * ny + wiz * nz <= 0.0:
        return -1.0
    return brdf_pdf_s(br, bg, bb, metallic, roughness, specular,
                      wox, woy, woz, wix, wiy, wiz, nx, ny, nz)


# --- lights ------------------------------------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def area_light_sample(lights: cython.double[:, ::1], li: cython.Py_ssize_t,
                      px: cython.double, py: cython.double,
                      pz: cython.double, u1: cython.double,
                      u2: cython.double, wrk: cython.double[:, ::1],
                      j: cython.Py_ssize_t) -> cython.double:
    """Sample a point on rectangle light li, seen from p.

    Writes wi to wrk[S_WI], radiance to wrk[S_RAD], distance to
    wrk[S_LS]; returns the solid-angle pdf (<= 0: no contribution).
    """
    ex: cython.double = lights[li, 3]
    ey: cython.double = lights[li, 4]
    ez: cython.double = lights[li, 5]
    fx: cython.double = lights[li, 6]
    fy: cython.double = lights[li, 7]
    fz: cython.double = lights[li, 8]
    qx: cython.double = lights[li, 0] + (u1 - 0.5) * ex + (u2 - 0.5) * fx
    qy: cython.double = lights[li, 1] + (u1 - 0.5) * ey + (u2 - 0.5) * fy
    qz: cython.double = lights[li, 2] + (u1 - 0.5) * ez + (u2 - 0.5) * fz
    wx: cython.double = qx - px
    wy: cython.double = qy - py
    wz: cython.double = qz - pz
    dist: cython.double = sqrt(wx * wx + wy * wy + wz * wz)
    if dist < 1e-9:
        return -1.0
    wx = wx / dist
    wy = wy / dist
    wz = wz / dist
    # rectangle normal = eu x ev; emission from the +normal side only
    lnx: cython.double = ey * fz - ez * fy
    lny: cython.double = ez * fx - ex * fz
    lnz: cython.double = ex * fy - ey * fx
    area: cython.double = sqrt(lnx * lnx + lny * lny + lnz * lnz)
    if area < 1e-12:
        return -1.0
    lnx = lnx / area
    lny = lny / area
    lnz = lnz / area
    cos_l: cython.double = -(wx * lnx + wy * lny + wz * lnz)
    if cos_l <= 1e-9:
        return -1.0
    wrk[j, S_WI] = wx
    wrk[j, S_WI + 1] = wy
    wrk[j, S_WI + 2] = wz
    wrk[j, S_RAD] = lights[li, 9]
    wrk[j, S_RAD + 1] = lights[li, 10]
    wrk[j, S_RAD + 2] = lights[li, 11]
    wrk[j, S_LS] = dist
    return dist * dist / (cos_l * area)


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def cube_face_uv(dx: cython.double, dy: cython.double, dz: cython.double,
                 wrk: cython.double[:, ::1],
                 j: cython.Py_ssize_t) -> cython.Py_ssize_t:
    """Dominant-axis face for a direction; (u, v) in [0,1] to wrk[S_TMP..]."""
    ax: cython.double = fabs(dx)
    ay: cython.double = fabs(dy)
    az: cython.double = fabs(dz)
    face: cython.Py_ssize_t
    u: cython.double
    v: cython.double
    if ax >= ay and ax >= az:
        if dx > 0:
            face = 0
            u = -dz / ax
            v = -dy / ax
        else:
            face = 1
            u = dz / ax
            v = -dy / ax
    elif ay >= az:
        if dy > 0:
            face = 2
            u = dx / ay
            v = dz / ay
        else:
            face = 3
            u = dx / ay
            v = -dz / ay
    else:
        if dz > 0:
            face = 4
            u = dx / az
            v = -dy / az
        else:
            face = 5
            u = -dx / az
            v = -dy / az
    wrk[j, S_TMP] = 0.5 * (u + 1.0)
    wrk[j, S_TMP + 1] = 0.5 * (v + 1.0)
    return face


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def cube_fetch(cube: cython.double[:, ::1], res: cython.Py_ssize_t,
               face: cython.Py_ssize_t, u: cython.double, v: cython.double,
               wrk: cython.double[:, ::1], j: cython.Py_ssize_t) -> cython.int:
    """Bilinear fetch (edge-clamped) into wrk[S_RAD..]."""
    x: cython.double = u * res - 0.5
    y: cython.double = v * res - 0.5
    x0: cython.Py_ssize_t = ifloor(x)
    y0: cython.Py_ssize_t = ifloor(y)
    fx: cython.double = x - x0
    fy: cython.double = y - y0
    x1: cython.Py_ssize_t = x0 + 1
    y1: cython.Py_ssize_t = y0 + 1
    if x0 < 0:
        x0 = 0
    if y0 < 0:
        y0 = 0
    if x1 > res - 1:
        x1 = res - 1
    if y1 > res - 1:
        y1 = res - 1
    if x0 > res - 1:
        x0 = res - 1
    if y0 > res - 1:
        y0 = res - 1
    b00: cython.Py_ssize_t = face * res * res + y0 * res + x0
    b10: cython.Py_ssize_t = face * res * res + y0 * res + x1
    b01: cython.Py_ssize_t = face * res * res + y1 * res + x0
    b11: cython.Py_ssize_t = face * res * res + y1 * res + x1
    k: cython.Py_ssize_t
    for k in range(3):
        wrk[j, S_RAD + k] = ((cube[b00, k] * (1 - fx) + cube[b10, k] * fx)
                             * (1 - fy)
                             + (cube[b01, k] * (1 - fx) + cube[b11, k] * fx)
                             * fy)
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def bg_eval(cube: cython.double[:, ::1], I: cython.longlong[::1],
            D: cython.double[::1], dx: cython.double, dy: cython.double,
            dz: cython.double, wrk: cython.double[:, ::1],
            j: cython.Py_ssize_t) -> cython.int:
    """Background radiance for a direction into wrk[S_RAD..]."""
    mode: cython.Py_ssize_t = I[I_BGMODE]
    if mode == 0:
        wrk[j, S_RAD] = 0.0
        wrk[j, S_RAD + 1] = 0.0
        wrk[j, S_RAD + 2] = 0.0
        return 0
    if mode == 1:
        wrk[j, S_RAD] = D[D_BGR]
        wrk[j, S_RAD + 1] = D[D_BGR + 1]
        wrk[j, S_RAD + 2] = D[D_BGR + 2]
        return 1
    face: cython.Py_ssize_t = cube_face_uv(dx, dy, dz, wrk, j)
    cube_fetch(cube, I[I_CUBERES], face, wrk[j, S_TMP], wrk[j, S_TMP + 1],
               wrk, j)
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def face_uv_dir(face: cython.Py_ssize_t, u: cython.double, v: cython.double,
                wrk: cython.double[:, ::1], j: cython.Py_ssize_t) -> cython.int:
    """Inverse of cube_face_uv: unit direction into wrk[S_WI..]."""
    a: cython.double = 2.0 * u - 1.0
    b: cython.double = 2.0 * v - 1.0
    dx: cython.double
    dy: cython.double
    dz: cython.double
    if face == 0:
        dx = 1.0
        dz = -a
        dy = -b
    elif face == 1:
        dx = -1.0
        dz = a
        dy = -b
    elif face == 2:
        dy = 1.0
        dx = a
        dz = b
    elif face == 3:
        dy = -1.0
        dx = a
        dz = -b
    elif face == 4:
        dz = 1.0
        dx = a
        dy = -b
    else:
        dz = -1.0
        dx = -a
        dy = -b
    inv: cython.double = 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
    wrk[j, S_WI] = dx * inv
    wrk[j, S_WI + 1] = dy * inv
    wrk[j, S_WI + 2] = dz * inv
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def bg_pdf(cube_pdf: cython.double[::1], I: cython.longlong[::1],
           dx: cython.double, dy: cython.double, dz: cython.double,
           wrk: cython.double[:, ::1], j: cython.Py_ssize_t) -> cython.double:
    """Solid-angle pdf of sample_background for a given direction."""
    mode: cython.Py_ssize_t = I[I_BGMODE]
    if mode == 0:
        return 0.0
    if mode == 1:
        return INV_FOUR_PI
    res: cython.Py_ssize_t = I[I_CUBERES]
    face: cython.Py_ssize_t = cube_face_uv(dx, dy, dz, wrk, j)
    ti: cython.Py_ssize_t = ifloor(wrk[j, S_TMP] * res)
    tj: cython.Py_ssize_t = ifloor(wrk[j, S_TMP + 1] * res)
    if ti > res - 1:
        ti = res - 1
    if tj > res - 1:
        tj = res - 1
    if ti < 0:
        ti = 0
    if tj < 0:
        tj = 0
    return cube_pdf[face * res * res + tj * res + ti]


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def bg_sample(cube: cython.double[:, ::1], cube_pdf: cython.double[::1],
              cube_cdf: cython.double[::1], I: cython.longlong[::1],
              D: cython.double[::1], u1: cython.double, u2: cython.double,
              u3: cython.double, wrk: cython.double[:, ::1],
              j: cython.Py_ssize_t) -> cython.double:
    """Sample an environment direction into wrk[S_WI..] and its radiance
    into wrk[S_RAD..]; returns the solid-angle pdf (<= 0: no energy)."""
    mode: cython.Py_ssize_t = I[I_BGMODE]
    if mode == 0:
        return -1.0
    if mode == 1:
        z: cython.double = 1.0 - 2.0 * u1
        r_: cython.double = sqrt(clampd(1.0 - z * z, 0.0, 1.0))
        phi: cython.double = TWO_PI * u2
        wrk[j, S_WI] = r_ * cos(phi)
        wrk[j, S_WI + 1] = r_ * sin(phi)
        wrk[j, S_WI + 2] = z
        wrk[j, S_RAD] = D[D_BGR]
        wrk[j, S_RAD + 1] = D[D_BGR + 1]
        wrk[j, S_RAD + 2] = D[D_BGR + 2]
        return INV_FOUR_PI
    res: cython.Py_ssize_t = I[I_CUBERES]
    ntex: cython.Py_ssize_t = 6 * res * res
    if cube_cdf[ntex - 1] <= 0.0:
        return -1.0
    # binary search the luminance CDF
    lo: cython.Py_ssize_t = 0
    hi: cython.Py_ssize_t = ntex - 1
    mid: cython.Py_ssize_t
    target: cython.double = u1 * cube_cdf[ntex - 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if cube_cdf[mid] <= target:
            lo = mid + 1
        else:
            hi = mid
    face: cython.Py_ssize_t = lo // (res * res)
    rem: cython.Py_ssize_t = lo - face * res * res
    tj: cython.Py_ssize_t = rem // res
    ti: cython.Py_ssize_t = rem - tj * res
    uu: cython.double = (ti + u2) / res
    vv: cython.double = (tj + u3) / res
    face_uv_dir(face, uu, vv, wrk, j)
    bg_eval(cube, I, D, wrk[j, S_WI], wrk[j, S_WI + 1], wrk[j, S_WI + 2],
            wrk, j)
    return cube_pdf[lo]


# --- camera ------------------------------------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def gen_ray(I: cython.longlong[::1], D: cython.double[::1],
            px: cython.Py_ssize_t, py: cython.Py_ssize_t,
            jx: cython.double, jy: cython.double,
            wrk: cython.double[:, ::1], j: cython.Py_ssize_t) -> cython.int:
    """Camera ray for pixel (px, py) into wrk[S_RO..], wrk[S_RD..]."""
    w: cython.double = cython.cast(cython.double, I[I_W])
    h: cython.double = cython.cast(cython.double, I[I_H])
    ndc_x: cython.double = ((px + jx) / w) * 2.0 - 1.0
    ndc_y: cython.double = 1.0 - ((py + jy) / h) * 2.0
    sx: cython.double = ndc_x * D[D_TANX]
    sy: cython.double = ndc_y * D[D_TANY]
    k: cython.Py_ssize_t
    if I[I_ORTHO] != 0:
        for k in range(3):
            wrk[j, S_RO + k] = (D[D_CPOS + k] + sx * D[D_CRIGHT + k]
                                + sy * D[D_CUP + k])
            wrk[j, S_RD + k] = D[D_CFWD + k]
        return 1
    dx: cython.double = D[D_CFWD] + sx * D[D_CRIGHT] + sy * D[D_CUP]
    dy: cython.double = (D[D_CFWD + 1] + sx * D[D_CRIGHT + 1]
                         + sy * D[D_CUP + 1])
    dz: cython.double = (D[D_CFWD + 2] + sx * D[D_CRIGHT + 2]
                         + sy * D[D_CUP + 2])
    inv: cython.double = 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
    wrk[j, S_RO] = D[D_CPOS]
    wrk[j, S_RO + 1] = D[D_CPOS + 1]
    wrk[j, S_RO + 2] = D[D_CPOS + 2]
    wrk[j, S_RD] = dx * inv
    wrk[j, S_RD + 1] = dy * inv
    wrk[j, S_RD + 2] = dz * inv
    return 1


# --- path tracing ------------------------------------------------------------

@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def trace_path(vol: cython.float[::1], cut: cython.uchar[::1],
               lut: cython.double[:, ::1], clips: cython.double[:, ::1],
               lights: cython.double[:, ::1], cube: cython.double[:, ::1],
               cube_pdf: cython.double[::1], cube_cdf: cython.double[::1],
               maj: cython.double[::1], I: cython.longlong[::1],
               D: cython.double[::1], ox: cython.double, oy: cython.double,
               oz: cython.double, dx: cython.double, dy: cython.double,
               dz: cython.double, wrk: cython.double[:, ::1],
               ctr: cython.longlong[:, ::1], j: cython.Py_ssize_t,
               base: cython.ulonglong) -> cython.double:
    """One path; radiance into wrk[S_OUT..], first-hit normal into
    wrk[S_NRM..]; returns the first-interaction distance (or a huge
    value when the camera ray escapes directly)."""
    lr: cython.double = 0.0
    lg: cython.double = 0.0
    lb: cython.double = 0.0
    tr: cython.double = 1.0
    tg: cython.double = 1.0
    tb: cython.double = 1.0
    first_t: cython.double = BIG
    wrk[j, S_NRM] = 0.0
    wrk[j, S_NRM + 1] = 0.0
    wrk[j, S_NRM + 2] = 0.0
    prev_pdf: cython.double = -1.0  # <0: camera ray (no MIS vs NEE yet)
    bounce: cython.Py_ssize_t = 0
    max_b: cython.Py_ssize_t = I[I_MAXB]
    nlight: cython.Py_ssize_t = I[I_NLIGHT]
    gmin: cython.double = D[D_GMIN]
    t: cython.double
    x: cython.double
    y: cython.double
    z: cython.double
    k: cython.Py_ssize_t
    li: cython.Py_ssize_t
    while True:
        t = track(0, vol, cut, lut, clips, maj, I, D,
                  ox, oy, oz, dx, dy, dz, BIG, wrk, ctr, j, base)
        if t < 0.0:
            # escaped: background via MIS against the NEE technique
            if bg_eval(cube, I, D, dx, dy, dz, wrk, j) != 0:
                wmis: cython.double = 1.0
                if prev_pdf > 0.0:
                    pb: cython.double = bg_pdf(cube_pdf, I, dx, dy, dz, wrk, j)
                    wmis = prev_pdf / (prev_pdf + pb)
                lr = lr + tr * wrk[j, S_RAD] * wmis
                lg = lg + tg * wrk[j, S_RAD + 1] * wmis
                lb = lb + tb * wrk[j, S_RAD + 2] * wmis
            break
        x = ox + t * dx
        y = oy + t * dy
        z = oz + t * dz
        if bounce == 0:
            first_t = t
        classify_at(vol, cut, lut, clips, I, D, x, y, z, wrk, j)
        cr: cython.double = wrk[j, S_CLS]
        cg: cython.double = wrk[j, S_CLS + 1]
        cb: cython.double = wrk[j, S_CLS + 2]
        gmag: cython.double = gradient_at(vol, I, D, x, y, z, wrk, j)
        surface: cython.int = 1 if gmag >= gmin else 0
        nx: cython.double = 0.0
        ny: cython.double = 0.0
        nz: cython.double = 0.0
        if surface != 0:
            nx = -wrk[j, S_GRD] / gmag
            ny = -wrk[j, S_GRD + 1] / gmag
            nz = -wrk[j, S_GRD + 2] / gmag
            if nx * dx + ny * dy + nz * dz > 0.0:
                nx = -nx
                ny = -ny
                nz = -nz
        if bounce == 0 and I[I_WRITEAUX] != 0:
            if surface != 0:
                wrk[j, S_NRM] = nx
                wrk[j, S_NRM + 1] = ny
                wrk[j, S_NRM + 2] = nz
            else:
                wrk[j, S_NRM] = -dx
                wrk[j, S_NRM + 1] = -dy
                wrk[j, S_NRM + 2] = -dz
        wox: cython.double = -dx
        woy: cython.double = -dy
        woz: cython.double = -dz
        met: cython.double = D[D_MET]
        rough: cython.double = D[D_ROUGH]
        spc: cython.double = D[D_SPEC]
        # next-event estimation: area lights (weight 1; lights are not
        # hittable by path rays) and background (MIS balance heuristic)
        u1: cython.double
        u2: cython.double
        pdf_l: cython.double
        trans: cython.double
        cosl: cython.double
        fr_: cython.double
        fg_: cython.double
        fb_: cython.double
        scale: cython.double
        for li in range(nlight):
            u1 = rnd(base, ctr, j)
            u2 = rnd(base, ctr, j)
            pdf_l = area_light_sample(lights, li, x, y, z, u1, u2, wrk, j)
            if pdf_l <= 0.0:
                continue
            wx: cython.double = wrk[j, S_WI]
            wy: cython.double = wrk[j, S_WI + 1]
            wz: cython.double = wrk[j, S_WI + 2]
            rr_: cython.double = wrk[j, S_RAD]
            rg_: cython.double = wrk[j, S_RAD + 1]
            rb_: cython.double = wrk[j, S_RAD + 2]
            dist: cython.double = wrk[j, S_LS]
            if surface != 0:
                cosl = wx * nx + wy * ny + wz * nz
                if cosl <= 0.0:
                    continue
                if brdf_eval_s(cr, cg, cb, met, rough, spc, wox, woy, woz,
                               wx, wy, wz, nx, ny, nz, wrk, j) == 0:
                    continue
                fr_ = wrk[j, S_F] * cosl
                fg_ = wrk[j, S_F + 1] * cosl
                fb_ = wrk[j, S_F + 2] * cosl
            else:
                fr_ = cr * INV_FOUR_PI
                fg_ = cg * INV_FOUR_PI
                fb_ = cb * INV_FOUR_PI
            trans = track(1, vol, cut, lut, clips, maj, I, D,
                          x, y, z, wx, wy, wz, dist, wrk, ctr, j, base)
            if trans <= 0.0:
                continue
            scale = trans / pdf_l
            lr = lr + tr * fr_ * rr_ * scale
            lg = lg + tg * fg_ * rg_ * scale
            lb = lb + tb * fb_ * rb_ * scale
        if I[I_BGMODE] != 0:
            u1 = rnd(base, ctr, j)
            u2 = rnd(base, ctr, j)
            u3: cython.double = rnd(base, ctr, j)
            pdf_l = bg_sample(cube, cube_pdf, cube_cdf, I, D, u1, u2, u3,
                              wrk, j)
            if pdf_l > 0.0:
                bwx: cython.double = wrk[j, S_WI]
                bwy: cython.double = wrk[j, S_WI + 1]
                bwz: cython.double = wrk[j, S_WI + 2]
                brr: cython.double = wrk[j, S_RAD]
                brg: cython.double = wrk[j, S_RAD + 1]
                brb: cython.double = wrk[j, S_RAD + 2]
                ok: cython.int = 1
                pdf_fwd: cython.double
                if surface != 0:
                    cosl = bwx * nx + bwy * ny + bwz * nz
                    if cosl <= 0.0:
                        ok = 0
                    else:
                        if brdf_eval_s(cr, cg, cb, met, rough, spc,
                                       wox, woy, woz, bwx, bwy, bwz,
                                       nx, ny, nz, wrk, j) == 0:
                            ok = 0
                        else:
                            fr_ = wrk[j, S_F] * cosl
                            fg_ = wrk[j, S_F + 1] * cosl
                            fb_ = wrk[j, S_F + 2] * cosl
                            pdf_fwd = brdf_pdf_s(cr, cg, cb, met, rough,
                                                 spc, wox, woy, woz, bwx,
                                                 bwy, bwz, nx, ny, nz)
                else:
                    fr_ = cr * INV_FOUR_PI
                    fg_ = cg * INV_FOUR_PI
                    fb_ = cb * INV_FOUR_PI
                    pdf_fwd = INV_FOUR_PI
                if ok != 0:
                    trans = track(1, vol, cut, lut, clips, maj, I, D,
                                  x, y, z, bwx, bwy, bwz, BIG,
                                  wrk, ctr, j, base)
                    if trans > 0.0:
                        wmis2: cython.double = pdf_l / (pdf_l + pdf_fwd)
                        scale = trans * wmis2 / pdf_l
                        lr = lr + tr * fr_ * brr * scale
                        lg = lg + tg * fg_ * brg * scale
                        lb = lb + tb * fb_ * brb * scale
        # continue the path
        if bounce + 1 >= max_b:
            break
        if surface != 0:
            u1 = rnd(base, ctr, j)
            u2 = rnd(base, ctr, j)
            lu: cython.double = rnd(base, ctr, j)
            pdf_s: cython.double = brdf_sample_s(cr, cg, cb, met, rough,
                                                 spc, wox, woy, woz,
                                                 nx, ny, nz, u1, u2, lu,
                                                 wrk, j)
            if pdf_s <= 1e-12:
                break
            swx: cython.double = wrk[j, S_WI]
            swy: cython.double = wrk[j, S_WI + 1]
            swz: cython.double = wrk[j, S_WI + 2]
            if brdf_eval_s(cr, cg, cb, met, rough, spc, wox, woy, woz,
                           swx, swy, swz, nx, ny, nz, wrk, j) == 0:
                break
            cosl = swx * nx + swy * ny + swz * nz
            tr = tr * wrk[j, S_F] * cosl / pdf_s
            tg = tg * wrk[j, S_F + 1] * cosl / pdf_s
            tb = tb * wrk[j, S_F + 2] * cosl / pdf_s
            dx = swx
            dy = swy
            dz = swz
            prev_pdf = pdf_s
        else:
            u1 = rnd(base, ctr, j)
            u2 = rnd(base, ctr, j)
            zc: cython.double = 1.0 - 2.0 * u1
            rc: cython.double = sqrt(clampd(1.0 - zc * zc, 0.0, 1.0))
            ph: cython.double = TWO_PI * u2
            dx = rc * cos(ph)
            dy = rc * sin(ph)
            dz = zc
            tr = tr * cr
            tg = tg * cg
            tb = tb * cb
            prev_pdf = INV_FOUR_PI
        ox = x
        oy = y
        oz = z
        bounce = bounce + 1
        if bounce >= 3:
            q: cython.double = clampd(luminance(tr, tg, tb), 0.05, 0.95)
            if rnd(base, ctr, j) > q:
                break
            tr = tr / q
            tg = tg / q
            tb = tb / q
    # non-finite contributions are dropped (counted by the caller)
    wrk[j, S_OUT] = lr
    wrk[j, S_OUT + 1] = lg
    wrk[j, S_OUT + 2] = lb
    return first_t


@cython.ccall
def render_pass(accum: cython.double[:, :, ::1],
                aux_depth: cython.double[:, ::1],
                aux_normal: cython.double[:, :, ::1],
                diag: cython.longlong[::1], wrk: cython.double[:, ::1],
                ctr: cython.longlong[:, ::1], vol: cython.float[::1],
                cut: cython.uchar[::1], lut: cython.double[:, ::1],
                clips: cython.double[:, ::1], lights: cython.double[:, ::1],
                cube: cython.double[:, ::1], cube_pdf: cython.double[::1],
                cube_cdf: cython.double[::1], maj: cython.double[::1],
                I: cython.longlong[::1], D: cython.double[::1],
                pass_index: cython.longlong, seed: cython.ulonglong,
                threads: cython.int) -> cython.int:
    """One full-frame pass; adds radiance into accum.

    Per-pixel RNG streams are keyed by (seed, pixel index, pass), so the
    result is independent of row scheduling and thread count.
    """
    h: cython.Py_ssize_t = I[I_H]
    w: cython.Py_ssize_t = I[I_W]
    hj2: cython.double = halton(
        cython.cast(cython.ulonglong, pass_index) + 1, 2)
    hj3: cython.double = halton(
        cython.cast(cython.ulonglong, pass_index) + 1, 3)
    j: cython.Py_ssize_t
    i: cython.Py_ssize_t
    pix: cython.Py_ssize_t
    base: cython.ulonglong
    rot: cython.ulonglong
    jx: cython.double
    jy: cython.double
    ft: cython.double
    v: cython.double
    bad: cython.int
    k: cython.Py_ssize_t
    for j in prange(h, nogil=True, num_threads=threads, schedule='static'):
        for i in range(w):
            pix = j * w + i
            base = stream_base(seed, cython.cast(cython.ulonglong, pix),
                               cython.cast(cython.ulonglong, pass_index))
            ctr[j, 0] = 0
            # stratified pixel jitter: per-pass Halton point with a
            # per-pixel Cranley-Patterson rotation
            rot = mix64(mix64(seed ^ JITTER_SALT)
                        ^ cython.cast(cython.ulonglong, pix))
            jx = hj2 + (rot >> 11) * INV53
            jy = hj3 + (mix64(rot) >> 11) * INV53
            jx = jx - floor(jx)
            jy = jy - floor(jy)
            gen_ray(I, D, i, j, jx, jy, wrk, j)
            ft = trace_path(vol, cut, lut, clips, lights, cube, cube_pdf,
                            cube_cdf, maj, I, D, wrk[j, S_RO],
                            wrk[j, S_RO + 1], wrk[j, S_RO + 2],
                            wrk[j, S_RD], wrk[j, S_RD + 1], wrk[j, S_RD + 2],
                            wrk, ctr, j, base)
            bad = 0
            for k in range(3):
                v = wrk[j, S_OUT + k]
                if not (v == v) or v > BIG or v < 0.0:
                    bad = 1
            if bad != 0:
                diag[j] = diag[j] + 1
            else:
                for k in range(3):
                    accum[j, i, k] = accum[j, i, k] + wrk[j, S_OUT + k]
            if I[I_WRITEAUX] != 0:
                aux_depth[j, i] = ft
                for k in range(3):
                    aux_normal[j, i, k] = wrk[j, S_NRM + k]
    return 0


# --- exported single-operation entry points (tests and module APIs) ----------

def transmittance_one(vol, cut, lut, clips, maj, I, D,
                      x0, y0, z0, x1, y1, z1, seed, sample_index, wrk, ctr):
    """One ratio-tracking transmittance estimate between two points."""
    dx = x1 - x0
    dy = y1 - y0
    dz = z1 - z0
    dist = sqrt(dx * dx + dy * dy + dz * dz)
    if dist < 1e-12:
        return 1.0
    base = stream_base(seed, sample_index, 0x7A5C)
    ctr[0, 0] = 0
    return track(1, vol, cut, lut, clips, maj, I, D, x0, y0, z0,
                 dx / dist, dy / dist, dz / dist, dist, wrk, ctr, 0, base)


@cython.ccall
def transmittance_batch(out: cython.double[::1], vol: cython.float[::1],
                        cut: cython.uchar[::1], lut: cython.double[:, ::1],
                        clips: cython.double[:, ::1], maj: cython.double[::1],
                        I: cython.longlong[::1], D: cython.double[::1],
                        x0: cython.double, y0: cython.double,
                        z0: cython.double, x1: cython.double,
                        y1: cython.double, z1: cython.double,
                        seed: cython.ulonglong, wrk: cython.double[:, ::1],
                        ctr: cython.longlong[:, ::1]) -> cython.int:
    """Independent transmittance estimates for the same segment."""
    n: cython.Py_ssize_t = out.shape[0]
    dx: cython.double = x1 - x0
    dy: cython.double = y1 - y0
    dz: cython.double = z1 - z0
    dist: cython.double = sqrt(dx * dx + dy * dy + dz * dz)
    k: cython.Py_ssize_t
    base: cython.ulonglong
    if dist < 1e-12:
        for k in range(n):
            out[k] = 1.0
        return 0
    dx = dx / dist
    dy = dy / dist
    dz = dz / dist
    for k in range(n):
        base = stream_base(seed, cython.cast(cython.ulonglong, k), 0x7A5C)
        ctr[0, 0] = 0
        out[k] = track(1, vol, cut, lut, clips, maj, I, D,
                       x0, y0, z0, dx, dy, dz, dist, wrk, ctr, 0, base)
    return 0


@cython.ccall
def free_flight_batch(out: cython.double[::1], vol: cython.float[::1],
                      cut: cython.uchar[::1], lut: cython.double[:, ::1],
                      clips: cython.double[:, ::1], maj: cython.double[::1],
                      I: cython.longlong[::1], D: cython.double[::1],
                      ox: cython.double, oy: cython.double,
                      oz: cython.double, dx: cython.double,
                      dy: cython.double, dz: cython.double,
                      seed: cython.ulonglong, wrk: cython.double[:, ::1],
                      ctr: cython.longlong[:, ::1]) -> cython.int:
    """Independent delta-tracking flight distances (-1 where escaped)."""
    n: cython.Py_ssize_t = out.shape[0]
    k: cython.Py_ssize_t
    base: cython.ulonglong
    for k in range(n):
        base = stream_base(seed, cython.cast(cython.ulonglong, k), 0x3F1D)
        ctr[0, 0] = 0
        out[k] = track(0, vol, cut, lut, clips, maj, I, D,
                       ox, oy, oz, dx, dy, dz, BIG, wrk, ctr, 0, base)
    return 0


def trace_path_one(vol, cut, lut, clips, lights, cube, cube_pdf, cube_cdf,
                   maj, I, D, ox, oy, oz, dx, dy, dz, seed, sample_index,
                   wrk, ctr):
    """One path estimate; returns (r, g, b, first_hit_t)."""
    base = stream_base(seed, sample_index, 0x51CE)
    ctr[0, 0] = 0
    ft = trace_path(vol, cut, lut, clips, lights, cube, cube_pdf, cube_cdf,
                    maj, I, D, ox, oy, oz, dx, dy, dz, wrk, ctr, 0, base)
    return wrk[0, S_OUT], wrk[0, S_OUT + 1], wrk[0, S_OUT + 2], ft


def sample_hu_one(vol, I, D, x, y, z):
    return sample_hu(vol, I, D, x, y, z)


def sigma_at_one(vol, cut, lut, clips, I, D, x, y, z):
    return sigma_at(vol, cut, lut, clips, I, D, x, y, z)


def gradient_one(vol, I, D, x, y, z, wrk):
    gmag = gradient_at(vol, I, D, x, y, z, wrk, 0)
    return wrk[0, S_GRD], wrk[0, S_GRD + 1], wrk[0, S_GRD + 2], gmag


def gen_ray_one(I, D, px, py, jx, jy, wrk):
    gen_ray(I, D, px, py, jx, jy, wrk, 0)
    return ((wrk[0, S_RO], wrk[0, S_RO + 1], wrk[0, S_RO + 2]),
            (wrk[0, S_RD], wrk[0, S_RD + 1], wrk[0, S_RD + 2]))


# --- BRDF module API ---------------------------------------------------------

def brdf_eval_one(base_color, metallic, roughness, specular, wo, wi, n, wrk):
    brdf_eval_s(base_color[0], base_color[1], base_color[2], metallic,
                roughness, specular, wo[0], wo[1], wo[2], wi[0], wi[1],
                wi[2], n[0], n[1], n[2], wrk, 0)
    return wrk[0, S_F], wrk[0, S_F + 1], wrk[0, S_F + 2]


def brdf_pdf_one(base_color, metallic, roughness, specular, wo, wi, n):
    return brdf_pdf_s(base_color[0], base_color[1], base_color[2], metallic,
                      roughness, specular, wo[0], wo[1], wo[2], wi[0],
                      wi[1], wi[2], n[0], n[1], n[2])


def brdf_sample_one(base_color, metallic, roughness, specular, wo, n,
                    u1, u2, lobe_u, wrk):
    """Returns (wi, pdf) or (None, pdf<=0) for invalid samples."""
    pdf = brdf_sample_s(base_color[0], base_color[1], base_color[2],
                        metallic, roughness, specular, wo[0], wo[1], wo[2],
                        n[0], n[1], n[2], u1, u2, lobe_u, wrk, 0)
    if pdf <= 0.0:
        return None, pdf
    return (wrk[0, S_WI], wrk[0, S_WI + 1], wrk[0, S_WI + 2]), pdf


@cython.ccall
def brdf_sample_batch(out_wi: cython.double[:, ::1],
                      out_pdf: cython.double[::1], br: cython.double,
                      bg: cython.double, bb: cython.double,
                      metallic: cython.double, roughness: cython.double,
                      specular: cython.double, wox: cython.double,
                      woy: cython.double, woz: cython.double,
                      nx: cython.double, ny: cython.double,
                      nz: cython.double, seed: cython.ulonglong,
                      wrk: cython.double[:, ::1],
                      ctr: cython.longlong[:, ::1]) -> cython.int:
    """Batch BSDF sampling; invalid samples get pdf <= 0."""
    n: cython.Py_ssize_t = out_pdf.shape[0]
    k: cython.Py_ssize_t
    base: cython.ulonglong
    u1: cython.double
    u2: cython.double
    lu: cython.double
    pdf: cython.double
    for k in range(n):
        base = stream_base(seed, cython.cast(cython.ulonglong, k), 0xB5DF)
        ctr[0, 0] = 0
        u1 = rnd(base, ctr, 0)
        u2 = rnd(base, ctr, 0)
        lu = rnd(base, ctr, 0)
        pdf = brdf_sample_s(br, bg, bb, metallic, roughness, specular,
                            wox, woy, woz, nx, ny, nz, u1, u2, lu, wrk, 0)
        out_pdf[k] = pdf
        out_wi[k, 0] = wrk[0, S_WI]
        out_wi[k, 1] = wrk[0, S_WI + 1]
        out_wi[k, 2] = wrk[0, S_WI + 2]
    return 0


@cython.ccall
def brdf_albedo(out: cython.double[::1], br: cython.double,
                bg: cython.double, bb: cython.double,
                metallic: cython.double, roughness: cython.double,
                specular: cython.double, wox: cython.double,
                woy: cython.double, woz: cython.double, nx: cython.double,
                ny: cython.double, nz: cython.double,
                nsamples: cython.longlong, seed: cython.ulonglong,
                wrk: cython.double[:, ::1],
                ctr: cython.longlong[:, ::1]) -> cython.int:
    """Directional-hemispherical albedo by uniform hemisphere MC."""
    onb(nx, ny, nz, wrk, 0)
    tx: cython.double = wrk[0, S_TMP]
    ty: cython.double = wrk[0, S_TMP + 1]
    tz: cython.double = wrk[0, S_TMP + 2]
    bx: cython.double = wrk[0, S_TMP + 3]
    by: cython.double = wrk[0, S_TMP + 4]
    bz: cython.double = wrk[0, S_TMP + 5]
    ar: cython.double = 0.0
    ag: cython.double = 0.0
    ab: cython.double = 0.0
    k: cython.longlong
    base: cython.ulonglong
    u1: cython.double
    u2: cython.double
    cz: cython.double
    sz: cython.double
    phi: cython.double
    lx: cython.double
    ly: cython.double
    wix: cython.double
    wiy: cython.double
    wiz: cython.double
    for k in range(nsamples):
        base = stream_base(seed, cython.cast(cython.ulonglong, k), 0xA1B0)
        ctr[0, 0] = 0
        u1 = rnd(base, ctr, 0)
        u2 = rnd(base, ctr, 0)
        cz = u1  # uniform hemisphere: cos theta ~ U
        sz = sqrt(clampd(1.0 - cz * cz, 0.0, 1.0))
        phi = TWO_PI * u2
        lx = sz * cos(phi)
        ly = sz * sin(phi)
        wix = lx * tx + ly * bx + cz * nx
        wiy = lx * ty + ly * by + cz * ny
        wiz = lx * tz + ly * bz + cz * nz
        if brdf_eval_s(br, bg, bb, metallic, roughness, specular,
                       wox, woy, woz, wix, wiy, wiz, nx, ny, nz,
                       wrk, 0) != 0:
            ar = ar + wrk[0, S_F] * cz
            ag = ag + wrk[0, S_F + 1] * cz
            ab = ab + wrk[0, S_F + 2] * cz
    scale: cython.double = TWO_PI / nsamples  # 1/pdf = 2 pi
    out[0] = ar * scale
    out[1] = ag * scale
    out[2] = ab * scale
    return 0


@cython.ccall
def brdf_pdf_integral(br: cython.double, bg: cython.double,
                      bb: cython.double, metallic: cython.double,
                      roughness: cython.double, specular: cython.double,
                      wox: cython.double, woy: cython.double,
                      woz: cython.double, nx: cython.double,
                      ny: cython.double, nz: cython.double,
                      nsamples: cython.longlong,
                      seed: cython.ulonglong, wrk: cython.double[:, ::1],
                      ctr: cython.longlong[:, ::1]) -> cython.double:
    """Uniform-hemisphere MC estimate of the sample pdf's integral."""
    onb(nx, ny, nz, wrk, 0)
    tx: cython.double = wrk[0, S_TMP]
    ty: cython.double = wrk[0, S_TMP + 1]
    tz: cython.double = wrk[0, S_TMP + 2]
    bx: cython.double = wrk[0, S_TMP + 3]
    by: cython.double = wrk[0, S_TMP + 4]
    bz: cython.double = wrk[0, S_TMP + 5]
    acc: cython.double = 0.0
    k: cython.longlong
    base: cython.ulonglong
    u1: cython.double
    u2: cython.double
    cz: cython.double
    sz: cython.double
    phi: cython.double
    lx: cython.double
    ly: cython.double
    for k in range(nsamples):
        base = stream_base(seed, cython.cast(cython.ulonglong, k), 0xFD11)
        ctr[0, 0] = 0
        u1 = rnd(base, ctr, 0)
        u2 = rnd(base, ctr, 0)
        cz = u1
        sz = sqrt(clampd(1.0 - cz * cz, 0.0, 1.0))
        phi = TWO_PI * u2
        lx = sz * cos(phi)
        ly = sz * sin(phi)
        acc = acc + brdf_pdf_s(
            br, bg, bb, metallic, roughness, specular, wox, woy, woz,
            lx * tx + ly * bx + cz * nx, lx * ty + ly * by + cz * ny,
            lx * tz + ly * bz + cz * nz, nx, ny, nz)
    return acc * TWO_PI / nsamples


@cython.ccall
def brdf_sample_estimate(out: cython.double[::1], br: cython.double,
                         bg: cython.double, bb: cython.double,
                         metallic: cython.double, roughness: cython.double,
                         specular: cython.double, wox: cython.double,
                         woy: cython.double, woz: cython.double,
                         nx: cython.double, ny: cython.double,
                         nz: cython.double, nsamples: cython.longlong,
                         seed: cython.ulonglong, wrk: cython.double[:, ::1],
                         ctr: cython.longlong[:, ::1]) -> cython.int:
    """E[f cos / pdf] over BSDF samples (the albedo via the sampler)."""
    ar: cython.double = 0.0
    ag: cython.double = 0.0
    ab: cython.double = 0.0
    k: cython.longlong
    base: cython.ulonglong
    u1: cython.double
    u2: cython.double
    lu: cython.double
    pdf: cython.double
    cosl: cython.double
    for k in range(nsamples):
        base = stream_base(seed, cython.cast(cython.ulonglong, k), 0xE57A)
        ctr[0, 0] = 0
        u1 = rnd(base, ctr, 0)
        u2 = rnd(base, ctr, 0)
        lu = rnd(base, ctr, 0)
        pdf = brdf_sample_s(br, bg, bb, metallic, roughness, specular,
                            wox, woy, woz, nx, ny, nz, u1, u2, lu, wrk, 0)
        if pdf <= 1e-12:
            continue
        cosl = (wrk[0, S_WI] * nx + wrk[0, S_WI + 1] * ny
                + wrk[0, S_WI + 2] * nz)
        if brdf_eval_s(br, bg, bb, metallic, roughness, specular,
                       wox, woy, woz, wrk[0, S_WI], wrk[0, S_WI + 1],
                       wrk[0, S_WI + 2], nx, ny, nz, wrk, 0) != 0:
            ar = ar + wrk[0, S_F] * cosl / pdf
            ag = ag + wrk[0, S_F + 1] * cosl / pdf
            ab = ab + wrk[0, S_F + 2] * cosl / pdf
    out[0] = ar / nsamples
    out[1] = ag / nsamples
    out[2] = ab / nsamples
    return 0


# --- lighting kernel wrappers (parity tests) ---------------------------------

def area_light_sample_one(lights, li, p, u1, u2, wrk):
    """Returns (wi, radiance, dist, pdf) or None when no contribution."""
    pdf = area_light_sample(lights, li, p[0], p[1], p[2], u1, u2, wrk, 0)
    if pdf <= 0.0:
        return None
    return ((wrk[0, S_WI], wrk[0, S_WI + 1], wrk[0, S_WI + 2]),
            (wrk[0, S_RAD], wrk[0, S_RAD + 1], wrk[0, S_RAD + 2]),
            wrk[0, S_LS], pdf)


def bg_eval_one(cube, I, D, d, wrk):
    bg_eval(cube, I, D, d[0], d[1], d[2], wrk, 0)
    return wrk[0, S_RAD], wrk[0, S_RAD + 1], wrk[0, S_RAD + 2]


def bg_sample_one(cube, cube_pdf, cube_cdf, I, D, u1, u2, u3, wrk):
    pdf = bg_sample(cube, cube_pdf, cube_cdf, I, D, u1, u2, u3, wrk, 0)
    if pdf <= 0.0:
        return None
    return ((wrk[0, S_WI], wrk[0, S_WI + 1], wrk[0, S_WI + 2]),
            (wrk[0, S_RAD], wrk[0, S_RAD + 1], wrk[0, S_RAD + 2]), pdf)


def bg_pdf_one(cube_pdf, I, d, wrk):
    return bg_pdf(cube_pdf, I, d[0], d[1], d[2], wrk, 0)


def cube_dir_to_face_uv(d, wrk):
    face = cube_face_uv(d[0], d[1], d[2], wrk, 0)
    return face, wrk[0, S_TMP], wrk[0, S_TMP + 1]


def cube_face_uv_to_dir(face, u, v, wrk):
    face_uv_dir(face, u, v, wrk, 0)
    return wrk[0, S_WI], wrk[0, S_WI + 1], wrk[0, S_WI + 2]
