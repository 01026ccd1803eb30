"""Two-photon propagation through a double slit.

Two routes to the screen-plane amplitude are provided:

* :func:`detection_amplitude` -- closed form for point slits, driven by the
  four slit amplitudes ``c_ij`` (or the ``(alpha, phi)`` parameterization).
* :func:`propagate_numeric` -- quadrature through the whole chain
  (crystal plane, free space, finite-width slits, free space to the screen)
  with no point-slit approximation. It serves as the oracle for the first.

The transverse model is one-dimensional throughout. Slit 1 sits at
``x = +d/2`` and slit 2 at ``x = -d/2``.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import MemoryBudgetError, NonConvergenceError, SymmetryError
from .geometry import CoincidenceMap, DetectorGrid, Normalization, SlitGeometry, normalize
from .quadrature import integrate2d, panel_rule, union_rule

SYMMETRY_RTOL = 1e-9


def fresnel_propagator(x_out, x_in, dz: float, k: float):
    """Paraxial 1-D kernel ``sqrt(-i/(lambda dz)) exp(i pi (x_out - x_in)^2 / (lambda dz))``."""
    if not dz > 0:
        raise ValueError("propagation distance must be positive; dz -> 0 is the identity")
    lam = 2 * math.pi / k
    pref = cmath.sqrt(-1j / (lam * dz))
    diff = np.subtract(x_out, x_in)
    return pref * np.exp(1j * math.pi * diff**2 / (lam * dz))


def fresnel_transfer(kx, dz: float, k: float):
    """Plane-wave response of :func:`fresnel_propagator`.

    ``integral h(x, y) exp(-i kx y) dy = exp(-i kx x) * fresnel_transfer(kx, dz, k)``.
    """
    return np.exp(-1j * dz * np.square(kx) / (2.0 * k))


def amplitudes_from_params(alpha: float, phi: float) -> tuple[complex, complex]:
    """``(c11, c12)`` with ``c11 = c22 = e^{i phi} sin(alpha/2)`` and ``c12 = c21 = cos(alpha/2)``."""
    return cmath.exp(1j * phi) * math.sin(alpha / 2), complex(math.cos(alpha / 2))


def params_from_amplitudes(c11: complex, c12: complex) -> tuple[float, float]:
    """Inverse of :func:`amplitudes_from_params` for amplitudes with real ``c12``."""
    alpha = 2 * math.atan2(abs(c11), c12.real)
    phi = cmath.phase(c11) % (2 * math.pi) if abs(c11) > 0 else 0.0
    return alpha, phi


@dataclass(frozen=True)
class BiphotonSlitState:
    """Symmetric two-photon amplitude at the slits.

    ``c_ij`` is the amplitude for photon 1 leaving slit ``i`` and photon 2
    leaving slit ``j``. Only ``c11 == c22`` and ``c12 == c21`` is supported.
    """

    c11: complex
    c12: complex
    c21: complex
    c22: complex
    params: tuple | None = field(default=None, compare=False)

    @classmethod
    def from_params(cls, alpha: float, phi: float = 0.0) -> "BiphotonSlitState":
        c11, c12 = amplitudes_from_params(alpha, phi)
        return cls(c11, c12, c12, c11, params=(float(alpha), float(phi)))

    @classmethod
    def from_raw(cls, c11, c12, c21, c22, *, rtol: float = SYMMETRY_RTOL) -> "BiphotonSlitState":
        c = np.array([c11, c12, c21, c22], dtype=complex)
        scale = np.max(np.abs(c))
        if scale == 0:
            raise ValueError("all slit amplitudes vanish")
        bad = []
        if abs(c[0] - c[3]) > rtol * scale:
            bad.append(f"|c11 - c22| = {abs(c[0] - c[3]):.3g}")
        if abs(c[1] - c[2]) > rtol * scale:
            bad.append(f"|c12 - c21| = {abs(c[1] - c[2]):.3g}")
        if bad:
            raise SymmetryError("asymmetric slit excitation: " + ", ".join(bad)
                                + f" (scale {scale:.3g}, rtol {rtol:g})")
        return cls(*(complex(v) for v in c))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([[self.c11, self.c12], [self.c21, self.c22]], dtype=complex)

    def normalized(self) -> tuple[complex, complex]:
        """``(c~11, c~12)`` with unit norm and the global phase removed.

        Raw states are rotated so that ``c~12`` is real and non-negative
        (``alpha`` in ``[0, pi]``); states built from parameters keep the
        parameterization's own phase.
        """
        if self.params is not None:
            return amplitudes_from_params(*self.params)
        c11 = 0.5 * (self.c11 + self.c22)
        c12 = 0.5 * (self.c12 + self.c21)
        n = math.sqrt(abs(c11) ** 2 + abs(c12) ** 2)
        g = c12 / abs(c12) if abs(c12) > 0 else c11 / abs(c11)
        return c11 / (n * g), complex(abs(c12) / n)

    @property
    def alpha(self) -> float:
        return params_from_amplitudes(*self.normalized())[0]

    @property
    def phi(self) -> float:
        return params_from_amplitudes(*self.normalized())[1]


# --- crystal profiles -------------------------------------------------------

@dataclass(frozen=True)
class MomentumSupport:
    """Integration box in ``K = k1 + k2`` and ``q = k1 - k2`` (rad/m)."""

    sum_half_width: float
    diff_half_width: float
    panels: int = 2
    order: int = 16


@dataclass(frozen=True)
class PumpPhaseMatchProfiles:
    """Momentum-space pump profile and phase-matching function.

    Both callables take ``(k1, k2)`` arrays (transverse signal and idler
    wavevectors, rad/m) and return complex arrays of the broadcast shape.
    """

    pump: Callable
    phasematch: Callable
    support: MomentumSupport
    label: str = "custom"

    def joint(self, k1, k2):
        val = np.asarray(self.pump(k1, k2), dtype=complex) * np.asarray(self.phasematch(k1, k2), dtype=complex)
        if not np.all(np.isfinite(val)):
            raise ValueError(f"profile '{self.label}' is not finite on its support box")
        return val


def gaussian_pump(waist: float):
    """``exp(-(k1 + k2)^2 w^2 / 4)``."""
    return lambda k1, k2: np.exp(-np.square(k1 + k2) * waist**2 / 4.0)


def sinc_phasematch(crystal_length: float, k: float):
    """Collinear type-I form ``sinc(L (k1 - k2)^2 / (4 k))`` with ``sinc(u) = sin(u)/u``."""
    return lambda k1, k2: np.sinc(crystal_length * np.square(k1 - k2) / (4.0 * k) / math.pi)


def gaussian_phasematch(width: float):
    """Smooth stand-in ``exp(-(k1 - k2)^2 sigma^2 / 4)``; position-space correlation width ~ ``sigma``."""
    return lambda k1, k2: np.exp(-np.square(k1 - k2) * width**2 / 4.0)


def default_profiles(pump_waist: float, crystal_length: float, k: float, *, lobes: int = 20,
                     panels: int = 4) -> PumpPhaseMatchProfiles:
    """Gaussian pump with sinc phase matching; the box keeps ``lobes`` sinc lobes."""
    q_max = math.sqrt(4.0 * k * lobes * math.pi / crystal_length)
    support = MomentumSupport(12.0 / pump_waist, q_max, panels=panels)
    return PumpPhaseMatchProfiles(gaussian_pump(pump_waist), sinc_phasematch(crystal_length, k), support,
                                  label=f"gaussian-pump/sinc-pm(w={pump_waist:g}, L={crystal_length:g})")


def gaussian_profiles(pump_waist: float, correlation_width: float, *, panels: int = 2) -> PumpPhaseMatchProfiles:
    """Gaussian pump and Gaussian phase matching.

    A wide pump with a short correlation width approaches the NOON state at
    the slits; equal widths give an exact product state.
    """
    support = MomentumSupport(12.0 / pump_waist, 12.0 / correlation_width, panels=panels)
    return PumpPhaseMatchProfiles(gaussian_pump(pump_waist), gaussian_phasematch(correlation_width), support,
                                  label=f"gaussian-pump/gaussian-pm(w={pump_waist:g}, s={correlation_width:g})")


def make_profiles(name: str, *, k: float | None = None, **params) -> PumpPhaseMatchProfiles:
    """Build profiles from a config name: ``"default"``/``"sinc"``, ``"gaussian"``, ``"noon"``, ``"product"``."""
    name = name.lower()
    if name in ("default", "sinc"):
        if k is None:
            raise ValueError("sinc phase matching needs the wavenumber k")
        return default_profiles(params["pump_waist"], params["crystal_length"], k)
    if name == "gaussian":
        return gaussian_profiles(params["pump_waist"], params["correlation_width"])
    if name == "noon":
        d = params["d"]
        return gaussian_profiles(params.get("pump_waist", 5 * d), params.get("correlation_width", d / 10))
    if name == "product":
        w = params.get("width", params["d"])
        return gaussian_profiles(w, w)
    raise ValueError(f"unknown profile set {name!r}")


def _initial_panels(half_width: float, max_offset: float, order: int, base: int) -> int:
    # ~ order/4 oscillations per panel resolves exp(-i k x/2) well before doubling kicks in
    cycles = half_width * max_offset / (2 * math.pi)
    return max(base, int(math.ceil(4 * cycles / order)))


def slit_amplitudes(profiles: PumpPhaseMatchProfiles, geom: SlitGeometry, *, rtol: float = 1e-10,
                    symmetry_rtol: float = SYMMETRY_RTOL, max_doublings: int = 7) -> BiphotonSlitState:
    """Slit amplitudes for a crystal placed right at the slits.

    ``c11`` integrates ``E~ Xi~ exp(-i (k1 + k2) d/2)``; the other three use
    the matching sign choices. Integrated in ``(K, q)`` with ``dk1 dk2 = dK dq / 2``.
    """
    sup = profiles.support
    half = geom.d / 2

    def integrand(K, q):
        KK, QQ = np.meshgrid(K, q, indexing="ij")
        joint = 0.5 * profiles.joint(0.5 * (KK + QQ), 0.5 * (KK - QQ))
        eK = np.exp(-1j * K * half)[:, None]
        eq = np.exp(-1j * q * half)[None, :]
        return np.stack([joint * eK, joint * eq, joint * np.conj(eq), joint * np.conj(eK)])

    panels = max(_initial_panels(sup.sum_half_width, half, sup.order, sup.panels),
                 _initial_panels(sup.diff_half_width, half, sup.order, sup.panels))
    res = integrate2d(integrand, (-sup.sum_half_width, sup.sum_half_width),
                      (-sup.diff_half_width, sup.diff_half_width), order=sup.order, panels=panels,
                      rtol=rtol, max_doublings=max_doublings)
    c11, c12, c21, c22 = (complex(v) for v in res.value)
    return BiphotonSlitState.from_raw(c11, c12, c21, c22, rtol=symmetry_rtol)


# --- closed-form screen amplitude ------------------------------------------

@dataclass(frozen=True)
class DetectionAmplitude:
    psi: Callable
    meta: dict = field(default_factory=dict)

    def __call__(self, x1, x2):
        return self.psi(x1, x2)

    def on_grid(self, grid: DetectorGrid) -> np.ndarray:
        x = grid.positions
        return self.psi(x[:, None], x[None, :])

    def coincidence_map(self, grid: DetectorGrid, norm=Normalization.UNIT_MAX) -> CoincidenceMap:
        prob = np.abs(self.on_grid(grid)) ** 2
        return CoincidenceMap(normalize(prob, norm), norm, dict(self.meta))


def detection_amplitude(state: BiphotonSlitState, geom: SlitGeometry, R: float | None = None, *,
                        envelope: bool = False, normalize_state: bool = True) -> DetectionAmplitude:
    """Screen amplitude ``sum_ij c_ij h(x1, s_i d/2) h(x2, s_j d/2)`` for point slits.

    ``envelope=True`` multiplies each photon by the far-field single-slit
    factor ``sinc(k a x / 2R)`` of a slit of width ``geom.a``.
    """
    R = geom.R if R is None else R
    if not R > 0:
        raise ValueError("screen distance must be positive")
    if normalize_state:
        c11, c12 = state.normalized()
        c = np.array([[c11, c12], [c12, c11]], dtype=complex)
    else:
        c = state.amplitudes
    k, half, a = geom.k, geom.d / 2, geom.a

    def psi(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        h1 = (fresnel_propagator(x1, half, R, k), fresnel_propagator(x1, -half, R, k))
        h2 = (fresnel_propagator(x2, half, R, k), fresnel_propagator(x2, -half, R, k))
        out = (c[0, 0] * h1[0] * h2[0] + c[0, 1] * h1[0] * h2[1]
               + c[1, 0] * h1[1] * h2[0] + c[1, 1] * h1[1] * h2[1])
        if envelope and a > 0:
            out = out * np.sinc(k * a * x1 / (2 * R) / math.pi) * np.sinc(k * a * x2 / (2 * R) / math.pi)
        return out

    meta = {"c11": c[0, 0], "c12": c[0, 1], "R": R, "d": geom.d, "k": k}
    return DetectionAmplitude(psi, meta)


FIGURE_A1_PARAMS = {
    "a": (math.pi, 0.0),
    "b": (3 * math.pi / 2, 0.0),
    "c": (math.pi / 2, math.pi / 2),
    "d": (0.0, 0.0),
    "e": (math.pi / 2, 0.0),
    "f": (math.pi / 4, 0.0),
}


def figure_a1_panel(panel: str, geom: SlitGeometry, grid: DetectorGrid,
                    norm=Normalization.UNIT_MAX) -> CoincidenceMap:
    """Coincidence map for one of the six ``(alpha, phi)`` settings (a)-(f)."""
    try:
        alpha, phi = FIGURE_A1_PARAMS[panel.lower()]
    except KeyError:
        raise ValueError(f"panel must be one of {sorted(FIGURE_A1_PARAMS)}, got {panel!r}") from None
    amp = detection_amplitude(BiphotonSlitState.from_params(alpha, phi), geom)
    cmap = amp.coincidence_map(grid, norm)
    cmap.meta.update(panel=panel.lower(), alpha=alpha, phi=phi)
    return cmap


# --- quadrature oracle ------------------------------------------------------

def worker_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("NOONLITH_THREADS", "0") or 0) or (os.cpu_count() or 1)
    return max(1, int(threads))


def slit_function(x, geom: SlitGeometry) -> np.ndarray:
    """1 inside either opening ``d/2 - a/2 <= |x| <= d/2 + a/2``, else 0."""
    ax = np.abs(np.asarray(x, dtype=float))
    return ((ax >= geom.d / 2 - geom.a / 2) & (ax <= geom.d / 2 + geom.a / 2)).astype(float)


def _slit_field(profiles, xs, crystal_to_slit, k, K, wK, q, wq, threads):
    """Two-photon field at slit-plane node pairs, by quadrature over ``(K, q)``."""
    KK, QQ = np.meshgrid(K, q, indexing="ij")
    k1, k2 = 0.5 * (KK + QQ), 0.5 * (KK - QQ)
    W = profiles.joint(k1, k2) * (0.5 * wK[:, None] * wq[None, :])
    if crystal_to_slit > 0:
        W = W * fresnel_transfer(k1, crystal_to_slit, k) * fresnel_transfer(k2, crystal_to_slit, k)
    # crystal_to_slit == 0: h' is the delta function, field taken at the crystal plane
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    ssum, sdiff = (x1 + x2).ravel(), (x1 - x2).ravel()

    def rows(sl):
        A = np.exp(-0.5j * np.multiply.outer(ssum[sl], K))
        B = np.exp(-0.5j * np.multiply.outer(sdiff[sl], q))
        return np.einsum("pq,pq->p", A @ W, B)

    out = _chunked(rows, ssum.size, threads)
    return out.reshape(x1.shape)


def _chunked(fn, n, threads):
    workers = worker_count(threads)
    step = max(1, -(-n // workers))
    slices = [slice(i, min(i + step, n)) for i in range(0, n, step)]
    if workers == 1 or len(slices) == 1:
        return np.concatenate([fn(s) for s in slices])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(fn, slices)))


def propagate_numeric(profiles: PumpPhaseMatchProfiles, geom: SlitGeometry, crystal_to_slit: float,
                      slit_to_screen: float, grid: DetectorGrid, *, norm=Normalization.UNIT_SUM,
                      rtol: float = 1e-6, slit_order: int = 8, slit_panels: int = 1,
                      max_doublings: int = 5, memory_budget: float = 1 << 30,
                      threads: int | None = None) -> CoincidenceMap:
    """Coincidence map by quadrature through the full propagation chain.

    crystal plane -> free space ``crystal_to_slit`` -> slit mask of width
    ``geom.a`` -> free space ``slit_to_screen`` -> detector grid. The
    crystal-to-slit step uses the exact plane-wave response of the Fresnel
    kernel; ``crystal_to_slit == 0`` takes the field directly at the crystal
    plane. All remaining integrals are done by Gauss-Legendre quadrature,
    doubling every node count until successive maps agree to ``rtol``.
    """
    if not geom.a > 0:
        raise ValueError("the numerical oracle needs finite slits (a > 0)")
    if crystal_to_slit < 0 or not slit_to_screen > 0:
        raise ValueError("need crystal_to_slit >= 0 and slit_to_screen > 0")
    sup = profiles.support
    k = geom.k
    half, a = geom.d / 2, geom.a
    reach = geom.d + a
    pK = _initial_panels(sup.sum_half_width, reach / 2, sup.order, sup.panels)
    pq = _initial_panels(sup.diff_half_width, reach / 2, sup.order, sup.panels)
    xg = grid.positions

    def level(m):
        scale = 2**m
        nK, nq = pK * scale * sup.order, pq * scale * sup.order
        ns = 2 * slit_panels * scale * slit_order
        need = 16.0 * (ns * ns * (nK + nq) + 3 * nK * nq + 2 * grid.size * ns)
        if need > memory_budget:
            raise MemoryBudgetError(f"oracle level {m} needs ~{need / 2**20:.0f} MiB "
                                    f"(budget {memory_budget / 2**20:.0f} MiB)")
        K, wK = panel_rule(-sup.sum_half_width, sup.sum_half_width, pK * scale, sup.order)
        q, wq = panel_rule(-sup.diff_half_width, sup.diff_half_width, pq * scale, sup.order)
        xs, ws = union_rule([(-half - a / 2, -half + a / 2), (half - a / 2, half + a / 2)],
                            slit_panels * scale, slit_order)
        field = _slit_field(profiles, xs, crystal_to_slit, k, K, wK, q, wq, threads)
        mask = slit_function(xs, geom)
        field = field * np.outer(mask, mask)
        H = fresnel_propagator(xg[:, None], xs[None, :], slit_to_screen, k) * ws[None, :]
        psi = H @ field @ H.T
        return np.abs(psi) ** 2

    prev = normalize(level(0), Normalization.UNIT_SUM)
    err = math.inf
    for m in range(1, max_doublings + 1):
        cur = normalize(level(m), Normalization.UNIT_SUM)
        err = float(np.max(np.abs(cur - prev)) / np.max(cur))
        if err <= rtol:
            out = normalize(cur, norm)
            return CoincidenceMap(out, norm, {"oracle_error": err, "levels": m, "profiles": profiles.label})
        prev = cur
    raise NonConvergenceError(f"propagation oracle not converged to {rtol:g} (last change {err:.3g})",
                              estimate=prev, error=err)
