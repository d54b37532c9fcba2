"""Standard normal and standard bivariate normal kernels.

The bivariate CDF follows Genz's BVNU routine (Drezner-Wesolowsky
Gauss-Legendre integration along the correlation path, with the
Drezner expansion for |rho| >= 0.925). Everything is vectorised over
numpy arrays; rho may be a scalar or broadcast with the arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

TWO_PI = 2.0 * np.pi
SQRT_TWO_PI = np.sqrt(TWO_PI)
TAIL_CLAMP = 8.0

# 20-point Gauss-Legendre rule on [-1, 1], positive half.
_GL_X = np.array([
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
    0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
    0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
    0.07652652113349733,
])
_GL_W = np.array([
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
    0.1527533871307259,
])
# Nodes mapped to [0, 2] as in the Fortran/MATLAB original.
_X = np.concatenate([1.0 - _GL_X, 1.0 + _GL_X])
_W = np.concatenate([_GL_W, _GL_W])


def norm_cdf(x):
    return ndtr(x)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_TWO_PI


def bvn_pdf(a1, a2, rho):
    """Standard bivariate normal density phi_2(a1, a2; rho)."""
    a1, a2, rho = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, rho)))
    s2 = 1.0 - rho * rho
    with np.errstate(invalid="ignore", over="ignore"):
        q = (a1 * a1 - 2.0 * rho * a1 * a2 + a2 * a2) / s2
        out = np.exp(-0.5 * q) / (TWO_PI * np.sqrt(s2))
    return np.where(np.isfinite(a1) & np.isfinite(a2), out, 0.0)


def _check_rho(rho):
    if np.any(np.abs(rho) >= 1.0) or np.any(~np.isfinite(rho)):
        raise ValueError("bivariate normal kernel requires |rho| < 1")


def _bvnu(h, k, r):
    """Upper orthant probability P(X > h, Y > k) for finite h, k and |r| < 1."""
    out = np.empty_like(h)
    hk = h * k

    mid = np.abs(r) < 0.925
    if np.any(mid):
        hm, km, rm = h[mid], k[mid], r[mid]
        hs = 0.5 * (hm * hm + km * km)
        asr = 0.5 * np.arcsin(rm)
        sn = np.sin(asr[:, None] * _X)
        vals = np.exp((sn * (hm * km)[:, None] - hs[:, None]) / (1.0 - sn * sn)) @ _W
        out[mid] = vals * asr / TWO_PI + ndtr(-hm) * ndtr(-km)

    hi = ~mid
    if np.any(hi):
        hh, kk, rr = h[hi], k[hi].copy(), r[hi]
        hkk = hk[hi].copy()
        neg = rr < 0
        kk[neg] = -kk[neg]
        hkk[neg] = -hkk[neg]

        a_s = (1.0 - rr) * (1.0 + rr)
        a = np.sqrt(a_s)
        bs = (hh - kk) ** 2
        c = (4.0 - hkk) / 8.0
        d = (12.0 - hkk) / 80.0
        asr = -0.5 * (bs / a_s + hkk)
        bvn = np.where(
            asr > -100.0,
            a * np.exp(np.maximum(asr, -100.0)) * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s),
            0.0,
        )
        b = np.sqrt(bs)
        tail = np.exp(-0.5 * np.minimum(hkk, 200.0)) * SQRT_TWO_PI * ndtr(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
        bvn = bvn - np.where(hkk > -100.0, tail, 0.0)

        half = 0.5 * a
        xs = (half[:, None] * _X) ** 2
        asr2 = -0.5 * (bs[:, None] / xs + hkk[:, None])
        keep = asr2 > -100.0
        sp = 1.0 + c[:, None] * xs * (1.0 + 5.0 * d[:, None] * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-0.5 * hkk[:, None] * xs / (1.0 + rs) ** 2) / rs
        terms = np.where(keep, np.exp(np.maximum(asr2, -100.0)) * (sp - ep), 0.0)
        bvn = (half * (terms @ _W) - bvn) / TWO_PI

        res = np.empty_like(bvn)
        pos = rr > 0
        res[pos] = bvn[pos] + ndtr(-np.maximum(hh[pos], kk[pos]))
        ge = ~pos & (hh >= kk)
        res[ge] = -bvn[ge]
        lt = ~pos & (hh < kk)
        if np.any(lt):
            hl, kl = hh[lt], kk[lt]
            span = np.where(hl < 0, ndtr(kl) - ndtr(hl), ndtr(-hl) - ndtr(-kl))
            res[lt] = span - bvn[lt]
        out[hi] = res

    return np.clip(out, 0.0, 1.0)


def bvn_cdf(a1, a2, rho):
    """P(X <= a1, Y <= a2) for a standard bivariate normal with correlation rho.

    Arguments beyond +-8 are replaced by their exact marginal limits.
    """
    a1, a2, rho = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, rho)))
    _check_rho(rho)
    shape = a1.shape
    a1, a2, rho = (np.atleast_1d(v).ravel() for v in (a1, a2, rho))

    out = np.zeros(a1.shape)
    lo = (a1 < -TAIL_CLAMP) | (a2 < -TAIL_CLAMP)
    top1 = (a1 > TAIL_CLAMP) & ~lo
    top2 = (a2 > TAIL_CLAMP) & ~lo & ~top1
    out[top1] = ndtr(a2[top1])
    out[top2] = ndtr(a1[top2])
    core = ~(lo | top1 | top2)
    if np.any(core):
        out[core] = _bvnu(-a1[core], -a2[core], rho[core])
    return float(out[0]) if shape == () else out.reshape(shape)


@dataclass(frozen=True)
class BvnEval:
    """CDF value and first partials of H(a1, a2; rho)."""

    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    hrho: np.ndarray


def _conditional_cdfs(a1, a2, rho):
    s = np.sqrt(1.0 - rho * rho)
    with np.errstate(invalid="ignore"):
        c1 = ndtr((a2 - rho * a1) / s)
        c2 = ndtr((a1 - rho * a2) / s)
    c1 = np.where(np.isnan(c1), 0.0, c1)
    c2 = np.where(np.isnan(c2), 0.0, c2)
    return c1, c2


def bvn_partials(a1, a2, rho) -> BvnEval:
    """H together with dH/da1, dH/da2 and dH/drho (the bivariate density)."""
    a1, a2, rho = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, rho)))
    _check_rho(rho)
    c1, c2 = _conditional_cdfs(a1, a2, rho)
    return BvnEval(
        h=np.asarray(bvn_cdf(a1, a2, rho)),
        h1=norm_pdf(a1) * c1,
        h2=norm_pdf(a2) * c2,
        hrho=bvn_pdf(a1, a2, rho),
    )


@dataclass(frozen=True)
class BvnSecond:
    """All first and second partials of H in (a1, a2, rho)."""

    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    hr: np.ndarray
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray
    h1r: np.ndarray
    h2r: np.ndarray
    hrr: np.ndarray


def bvn_second(a1, a2, rho, with_cdf: bool = True) -> BvnSecond:
    """First and second derivatives of H, all in closed form.

    Finite arguments only; used in the likelihood inner loop.
    """
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    s2 = 1.0 - rho * rho
    c1, c2 = _conditional_cdfs(a1, a2, rho)
    dens = bvn_pdf(a1, a2, rho)
    h1 = norm_pdf(a1) * c1
    h2 = norm_pdf(a2) * c2
    quad = a1 * a1 - 2.0 * rho * a1 * a2 + a2 * a2
    return BvnSecond(
        h=bvn_cdf(a1, a2, rho) if with_cdf else np.full_like(a1, np.nan),
        h1=h1,
        h2=h2,
        hr=dens,
        h11=-a1 * h1 - rho * dens,
        h12=dens,
        h22=-a2 * h2 - rho * dens,
        h1r=-dens * (a1 - rho * a2) / s2,
        h2r=-dens * (a2 - rho * a1) / s2,
        hrr=dens * ((rho + a1 * a2) / s2 - rho * quad / (s2 * s2)),
    )
