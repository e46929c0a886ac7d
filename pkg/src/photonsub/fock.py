"""Truncated Fock-space state algebra for heralded non-Gaussian states.

States are density matrices on the Fock levels |0> .. |N_cut>.  The
quadrature convention is fixed to vacuum variance 1/2, i.e. x = (a + a†)/√2,
so that an ideal odd state reaches W(0,0) = -1/π.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import CutoffError, DegenerateHeraldError, ModelViolationError

VACUUM_VARIANCE = 0.5

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive operator on a truncated Fock space.

    ``mat`` has shape (cutoff+1, cutoff+1); entry [m, n] is <m|rho|n>.
    Validity (Hermiticity, trace, positivity) is checked on construction.
    """

    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        object.__setattr__(self, "mat", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got {mat.shape}")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"matrix not Hermitian: max asymmetry {herm:.3e}")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace must be 1, got {tr!r}")
        lo = np.linalg.eigvalsh(mat).min()
        if lo < -EIGENVALUE_TOL:
            raise ValueError(f"negative eigenvalue {lo:.3e}")

    @property
    def cutoff(self) -> int:
        return self.mat.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "dim": self.cutoff,
            "re": self.mat.real.tolist(),
            "im": self.mat.imag.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DensityMatrix":
        mat = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        if mat.shape[0] != d["dim"] + 1:
            raise ValueError("dim field inconsistent with matrix size")
        return cls(_sanitize(mat))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "DensityMatrix":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def _sanitize(mat: np.ndarray) -> np.ndarray:
    """Clean tiny numerical violations (hermitize, renormalize, clip spectrum)."""
    mat = 0.5 * (mat + mat.conj().T)
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    mat = (v * w) @ v.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    return mat / np.trace(mat).real


@dataclass(frozen=True)
class GaussianModeState:
    """Quadrature variances of a Gaussian state confined to one temporal mode.

    Vacuum units: v_minus = v_plus = 1/2 is vacuum.  Any such state is
    equivalent to a pure squeezed vacuum (parameter r) sent through a loss
    channel of transmissivity 1 - loss; see :func:`effective_squeezing_loss`.
    """

    v_minus: float
    v_plus: float

    def __post_init__(self):
        if self.v_minus <= 0 or self.v_plus <= 0:
            raise ValueError("variances must be positive")
        if self.v_minus * self.v_plus < 0.25 - 1e-12:
            raise ModelViolationError(
                f"uncertainty violated: v_minus*v_plus = {self.v_minus * self.v_plus:.6f} < 1/4"
            )

    def effective_squeezing_loss(self) -> tuple[float, float]:
        return effective_squeezing_loss(self.v_minus, self.v_plus)


def effective_squeezing_loss(v_minus: float, v_plus: float) -> tuple[float, float]:
    """Invert v∓ = (1-L) e^{∓2r}/2 + L/2 for (r, L).

    The two-moment system has the closed-form solution
    L = (4 v- v+ - 1) / (2 (v- + v+ - 1)), then r from the variance ratio.
    Degenerate vacuum input (1/2, 1/2) returns (0, 0) by convention.
    """
    prod = v_minus * v_plus
    if prod < 0.25 - 1e-12:
        raise ModelViolationError("v_minus*v_plus < 1/4 has no physical preimage")
    s = v_minus + v_plus - 1.0
    if abs(s) < 1e-14:
        # both variances at vacuum: squeezing and loss are indistinguishable
        return 0.0, 0.0
    loss = (4.0 * prod - 1.0) / (2.0 * s)
    if loss < -1e-9 or loss > 1.0 + 1e-9:
        raise ModelViolationError(
            f"no loss fraction in [0, 1] reproduces ({v_minus}, {v_plus}); got L={loss:.4f}"
        )
    loss = min(max(loss, 0.0), 1.0)
    if loss >= 1.0 - 1e-14:
        return 0.0, 1.0
    r = 0.25 * np.log((2.0 * v_plus - loss) / (2.0 * v_minus - loss))
    return float(r), float(loss)


# ---------------------------------------------------------------------------
# state construction


def lowering_operator(size: int) -> np.ndarray:
    """Matrix of the annihilation operator on ``size`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, size, dtype=float)), k=1)


def vacuum(cutoff: int) -> DensityMatrix:
    mat = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    mat[0, 0] = 1.0
    return DensityMatrix(mat)


def fock_state(n: int, cutoff: int) -> DensityMatrix:
    if n > cutoff:
        raise CutoffError(f"|{n}> does not fit below cutoff {cutoff}")
    mat = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    mat[n, n] = 1.0
    return DensityMatrix(mat)


def squeezed_vacuum_ket(r: float, cutoff: int) -> np.ndarray:
    """Fock amplitudes of S(r)|0>, c_{2n} = (-tanh r)^n sqrt((2n)!)/(2^n n!) / sqrt(cosh r).

    Positive r squeezes the x quadrature (Var x = e^{-2r}/2); negative r
    anti-squeezes it.  Raises if the truncated tail exceeds 1e-4.
    """
    ket = np.zeros(cutoff + 1)
    ns = np.arange(0, cutoff // 2 + 1)
    logmag = (
        ns * np.log(np.tanh(abs(r))) if r != 0 else np.where(ns == 0, 0.0, -np.inf)
    )
    logmag = logmag + 0.5 * gammaln(2 * ns + 1) - ns * np.log(2.0) - gammaln(ns + 1)
    amps = np.exp(logmag - 0.5 * np.log(np.cosh(r))) * np.where(r > 0, (-1.0) ** ns, 1.0)
    ket[2 * ns] = amps
    tail = 1.0 - np.sum(ket**2)
    if tail > 1e-4:
        raise CutoffError(
            f"cutoff {cutoff} truncates {tail:.2e} of the squeezed vacuum (r={r})"
        )
    return ket / np.linalg.norm(ket)


def squeezed_vacuum(
    state: GaussianModeState, cutoff: int, antisqueezed_x: bool = False
) -> DensityMatrix:
    """Fock representation of the Gaussian mode state.

    Built as a pure squeezed vacuum with the state's effective squeezing
    parameter sent through a loss channel of transmissivity 1 - L_eff.  By
    default the x quadrature carries v_minus; with ``antisqueezed_x`` the
    state is rotated so x carries v_plus instead.
    """
    if cutoff < 10:
        raise CutoffError("cutoff must be at least 10")
    r, loss = state.effective_squeezing_loss()
    if antisqueezed_x:
        r = -r
    ket = squeezed_vacuum_ket(r, cutoff)
    rho = DensityMatrix(np.outer(ket, ket).astype(complex))
    return apply_loss(rho, 1.0 - loss)


def coherent_state_ket(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    if alpha == 0:
        ket = np.zeros(cutoff + 1, dtype=complex)
        ket[0] = 1.0
        return ket
    log_mag = n * np.log(np.abs(alpha)) - 0.5 * gammaln(n + 1)
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(log_mag - 0.5 * np.abs(alpha) ** 2) * phase


def cat_state(alpha: complex, parity: int, cutoff: int) -> DensityMatrix:
    """Normalized |alpha> + parity |-alpha> superposition (parity = ±1)."""
    if parity not in (+1, -1):
        raise ValueError("parity must be +1 or -1")
    if abs(alpha) ** 2 > cutoff / 4:
        raise CutoffError(f"|alpha|^2 = {abs(alpha)**2:.2f} too large for cutoff {cutoff}")
    ket = coherent_state_ket(alpha, cutoff) + parity * coherent_state_ket(-alpha, cutoff)
    norm = np.linalg.norm(ket)
    if norm < 1e-150:
        raise ValueError("degenerate cat amplitude")
    ket = ket / norm
    return DensityMatrix(np.outer(ket, ket.conj()))


# ---------------------------------------------------------------------------
# channels


def _loss_kraus(size: int, eta: float, k: int) -> np.ndarray:
    """k-photon-loss Kraus operator A_k of the transmissivity-eta channel."""
    n = np.arange(k, size)
    log_c = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    if eta == 1.0:
        amp = np.ones_like(n, dtype=float) if k == 0 else np.zeros_like(n, dtype=float)
    elif eta == 0.0:
        amp = np.where(n == k, 1.0, 0.0)
    else:
        amp = np.exp(log_c + 0.5 * (n - k) * np.log(eta) + 0.5 * k * np.log(1.0 - eta))
    out = np.zeros((size, size))
    out[n - k, n] = amp
    return out


def apply_loss(rho: DensityMatrix, eta: float) -> DensityMatrix:
    """Full Kraus-sum bosonic loss channel with transmissivity eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must be in [0, 1], got {eta}")
    if eta == 1.0:
        return rho
    if eta == 0.0:
        return vacuum(rho.cutoff)
    size = rho.dim
    out = np.zeros((size, size), dtype=complex)
    for k in range(size):
        ak = _loss_kraus(size, eta, k)
        out += ak @ rho.mat @ ak.T
    return DensityMatrix(_sanitize(out))


def apply_loss_one_photon_approx(rho: DensityMatrix, loss: float) -> DensityMatrix:
    """Loss channel truncated at a single photon loss, then renormalized.

    Keeps only the no-loss and exactly-one-loss Kraus branches of the
    transmissivity-(1-loss) channel, so the flip probability of a Fock state
    |n> is n*loss*(1-loss)^(n-1), scaling with photon number.
    """
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss must be in [0, 1], got {loss}")
    if loss == 0.0:
        return rho
    size = rho.dim
    eta = 1.0 - loss
    a0 = _loss_kraus(size, eta, 0)
    a1 = _loss_kraus(size, eta, 1)
    out = a0 @ rho.mat @ a0.T + a1 @ rho.mat @ a1.T
    return DensityMatrix(_sanitize(out))


def subtraction_probabilities(rho: DensityMatrix, reflectivity: float, n_max: int = 4) -> np.ndarray:
    """P(exactly k photons in the tap arm) for k = 0..n_max.

    The tap beamsplitter keeps amplitude sqrt(R) in the signal arm; the
    conditional Kraus operators coincide with those of an eta = R loss
    channel.
    """
    if not 0.0 < reflectivity < 1.0:
        raise ValueError("reflectivity must be in (0, 1)")
    size = rho.dim
    probs = np.empty(min(n_max, size - 1) + 1)
    for k in range(len(probs)):
        ak = _loss_kraus(size, reflectivity, k)
        probs[k] = np.trace(ak @ rho.mat @ ak.T).real
    return probs


def photon_subtract(
    rho: DensityMatrix, reflectivity: float, n_sub: int
) -> tuple[DensityMatrix, float]:
    """Condition on exactly ``n_sub`` photons in the tap arm of the beamsplitter.

    Returns the renormalized conditional state and the herald probability.
    Raises :class:`DegenerateHeraldError` when the herald probability
    vanishes (nothing to subtract).
    """
    if not 0.0 < reflectivity < 1.0:
        raise ValueError("reflectivity must be in (0, 1)")
    if n_sub not in (1, 2):
        raise ValueError("n_sub must be 1 or 2")
    size = rho.dim
    ak = _loss_kraus(size, reflectivity, n_sub)
    cond = ak @ rho.mat @ ak.T
    prob = np.trace(cond).real
    if prob < 1e-15:
        raise DegenerateHeraldError(
            f"herald probability {prob:.3e} for {n_sub}-photon subtraction"
        )
    return DensityMatrix(_sanitize(cond / prob)), float(prob)


def mix(rho_a: DensityMatrix, rho_b: DensityMatrix, weight: float) -> DensityMatrix:
    """Convex mixture (1-w) rho_a + w rho_b."""
    if rho_a.dim != rho_b.dim:
        raise ValueError(f"dimension mismatch: {rho_a.dim} vs {rho_b.dim}")
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must be in [0, 1]")
    return DensityMatrix((1.0 - weight) * rho_a.mat + weight * rho_b.mat)


# ---------------------------------------------------------------------------
# metrics


def photon_distribution(rho: DensityMatrix) -> np.ndarray:
    return np.diag(rho.mat).real.copy()


def even_sum(rho: DensityMatrix) -> float:
    return float(photon_distribution(rho)[0::2].sum())


def odd_sum(rho: DensityMatrix) -> float:
    return float(photon_distribution(rho)[1::2].sum())


def mean_photon(rho: DensityMatrix) -> float:
    p = photon_distribution(rho)
    return float(np.dot(np.arange(len(p)), p))


def wigner_origin(rho: DensityMatrix) -> float:
    """W(0,0) = (1/pi) (p_even - p_odd)."""
    p = photon_distribution(rho)
    signs = (-1.0) ** np.arange(len(p))
    return float(np.dot(signs, p) / np.pi)


def _wigner_kernel(size: int, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Kernel K[m, n] with W = sum_{mn} rho[m, n] K[m, n] at each phase-space point.

    For n >= m:
    K_mn = (1/pi)(-1)^m sqrt(m!/n!) (sqrt2 (x+ip))^{n-m} e^{-(x²+p²)} L_m^{n-m}(2(x²+p²)).
    Evaluated by the stable upward recursion of generalized Laguerre polynomials.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = 2.0 * (x**2 + p**2)
    z = np.sqrt(2.0) * (x + 1j * p)
    gauss = np.exp(-(x**2 + p**2)) / np.pi
    kernel = np.zeros((size, size) + r2.shape, dtype=complex)
    for d in range(size):  # d = n - m
        # L_m^{(d)}(r2) upward in m
        lag_prev = np.zeros_like(r2)
        lag = np.ones_like(r2)
        pref = np.exp(-0.5 * (gammaln(np.arange(size - d) + 1 + d) - gammaln(np.arange(size - d) + 1)))
        zd = z**d
        for m in range(size - d):
            n = m + d
            kernel[m, n] = ((-1.0) ** m) * pref[m] * zd * lag * gauss
            if n != m:
                kernel[n, m] = np.conj(kernel[m, n])
            # recurrence: (m+1) L_{m+1}^d = (2m+d+1-r2) L_m^d - (m+d) L_{m-1}^d
            lag_next = ((2 * m + d + 1 - r2) * lag - (m + d) * lag_prev) / (m + 1)
            lag_prev, lag = lag, lag_next
    return kernel


def wigner(rho: DensityMatrix, x, p) -> np.ndarray | float:
    """Wigner function via the Fock-basis Laguerre series.

    ``x`` and ``p`` broadcast; returns real values with the normalization
    ∫∫ W dx dp = 1.  Warns if the population at the cutoff suggests a
    truncated series.
    """
    tail = photon_distribution(rho)[-1]
    if tail > 1e-6:
        warnings.warn(
            f"population {tail:.2e} at the Fock cutoff; Wigner series may be truncated",
            RuntimeWarning,
        )
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    xb, pb = np.broadcast_arrays(x, p)
    kernel = _wigner_kernel(rho.dim, xb, pb)
    w = np.einsum("mn,mn...->...", rho.mat, kernel).real
    return float(w) if w.ndim == 0 else w


def wigner_surface(
    rho: DensityMatrix, extent: float = 5.0, points: int = 201
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Wigner function on the default square grid; W[i, j] = W(x_j, p_i)."""
    xs = np.linspace(-extent, extent, points)
    ps = np.linspace(-extent, extent, points)
    w = wigner(rho, xs[None, :], ps[:, None])
    return xs, ps, w


def hermite_functions(x: np.ndarray, n_max: int) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions psi_n(x) for n = 0..n_max, shape (n_max+1, len(x)).

    Upward three-term recursion psi_n = sqrt(2/n) x psi_{n-1} - sqrt((n-1)/n) psi_{n-2},
    stable on the tomography domain (|x| <~ 10, n <~ 40).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1, x.size))
    out[0] = np.pi ** (-0.25) * np.exp(-0.5 * x**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, n_max + 1):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("oscillator eigenfunction recursion overflowed")
    return out


def default_quadrature_grid(rho: DensityMatrix, points: int = 2001) -> np.ndarray:
    """Grid covering at least six standard deviations of every marginal."""
    n = np.arange(rho.dim)
    nbar = mean_photon(rho)
    a = lowering_operator(rho.dim)
    a2 = np.trace(a @ a @ rho.mat)
    var_max = 0.5 * (1.0 + 2.0 * nbar) + abs(a2)
    half = max(6.0, 6.0 * np.sqrt(var_max))
    return np.linspace(-half, half, points)


def quadrature_marginal(
    rho: DensityMatrix, theta: float, grid: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Probability density Pr(x|theta) = sum_mn rho_mn psi_m psi_n e^{i(n-m)theta}.

    Returns (grid, pdf).  The density is clipped of numerical negatives below
    1e-10 and raises beyond that, since a broken state is the only way to get
    there.
    """
    if grid is None:
        grid = default_quadrature_grid(rho)
    psi = hermite_functions(grid, rho.cutoff)
    phases = np.exp(-1j * np.arange(rho.dim) * theta)
    proj = psi * phases[:, None]  # row m: psi_m e^{-im theta}
    pdf = np.einsum("mx,mn,nx->x", proj.conj(), rho.mat, proj).real
    if pdf.min() < -1e-10:
        raise ValueError(f"marginal density negative ({pdf.min():.3e}); invalid state")
    return grid, np.clip(pdf, 0.0, None)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dim != sigma.dim:
        raise ValueError("dimension mismatch")
    w, v = np.linalg.eigh(rho.mat)
    sq = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sq @ sigma.mat @ sq
    ev = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2)


def fidelity_to_cat(rho: DensityMatrix, alpha: complex, parity: int = -1) -> float:
    """Overlap <Psi_cat|rho|Psi_cat> with the ±alpha cat of given parity."""
    ket = coherent_state_ket(alpha, rho.cutoff) + parity * coherent_state_ket(-alpha, rho.cutoff)
    ket = ket / np.linalg.norm(ket)
    return float(np.real(ket.conj() @ rho.mat @ ket))


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def best_cat_fidelity(
    rho: DensityMatrix,
    parity: int = -1,
    bounds: tuple[float, float] = (0.1, 3.0),
    tol: float = 1e-4,
    max_iter: int = 200,
) -> tuple[float, float]:
    """Maximize fidelity to a real-amplitude cat by golden-section search.

    Returns (best fidelity, best alpha).
    """
    lo, hi = bounds
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc = fidelity_to_cat(rho, c, parity)
    fd = fidelity_to_cat(rho, d, parity)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = fidelity_to_cat(rho, c, parity)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = fidelity_to_cat(rho, d, parity)
    else:
        raise RuntimeError("golden-section search did not converge")
    alpha = 0.5 * (lo + hi)
    return fidelity_to_cat(rho, alpha, parity), float(alpha)


def distribution_to_csv(values: np.ndarray, path: str | Path, index=None) -> None:
    """Two-column CSV (index/grid, value)."""
    idx = np.arange(len(values)) if index is None else np.asarray(index)
    arr = np.column_stack([idx, values])
    np.savetxt(path, arr, delimiter=",", header="index,value", comments="")
