"""Time-domain Monte-Carlo cross-validation of the analytic spectra.

The conditional-feedback loop is simulated as a linear-Gaussian system:
the truth state, the stationary conditional-mean chain (continuous
Riccati gains of the quantum measurement model) and the classical
attraction feeding the (possibly delayed) conditional mean back are
fused into one continuous linear SDE, which is discretized EXACTLY (drift
exponential plus the matching van Loan noise covariance).  The record and
the innovation stream are obtained from integrator states, so the sampled
record is the true time-average over each step and the innovation
increments are exact Brownian increments.  The only approximation left is
the within-step placement of the delayed innovation injection, corrected
to midpoint (residual bias O(dt^2)).

Spectra are estimated from averaged boxcar periodograms with per-bin
standard errors; innovation whiteness is checked with a Ljung-Box
statistic.

Everything is in scaled units (hbar = M = omega_m = 1, vacuum record
spectrum = 1).  Use artificially enlarged gamma (Q <= 1e3): physical
quality factors need ~1/gamma ~ 1e9 s of model time and are out of reach;
the analytic modules are validated here in a reachable regime and trusted
elsewhere through their parameter-smooth closed forms.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .errors import UnstableLoop
from .mutual import MutualParams
from .single_mass import SingleMassParams

log = logging.getLogger(__name__)

# two-sided density of a unit vacuum record is 1 in the
# V = int (S/2) domega/2pi convention used by the analytic modules,
# i.e. 1/2 in the plain Fourier convention of the sampling below
_VAC = 0.5


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MCConfig:
    """Simulation settings for one Monte-Carlo run.

    params           : SingleMassParams or MutualParams (scaled units,
                       enlarged gamma)
    dt               : step, must resolve the fastest oscillation
                       (dt < (2 pi / omega_fast)/50)
    duration         : collected time per trajectory (after burn-in)
    n_trajectories   : independent noise realizations
    rng_seed         : base seed; trajectory i uses the counter-based
                       stream Philox(seed=[rng_seed, i])
    segment_duration : periodogram segment length (default duration/4)
    burn_in          : discarded settling time (default 2/gamma)
    """

    params: object
    dt: float
    duration: float
    n_trajectories: int
    rng_seed: int = 0
    segment_duration: float = None
    burn_in: float = None

    def __post_init__(self):
        if self.dt <= 0.0 or self.duration <= 0.0:
            raise ValueError("dt and duration must be positive")
        if self.n_trajectories < 1:
            raise ValueError("need at least one trajectory")
        fast = max(1.0, getattr(self.params, "omega_q", 1.0))
        if self.dt >= (2.0 * math.pi / fast) / 50.0:
            raise ValueError(
                f"dt = {self.dt} too coarse: need dt < (2 pi/omega)/50 "
                f"= {2.0 * math.pi / fast / 50.0:.4g}")
        if self.n_per_segment < 16:
            raise ValueError("segment too short for a periodogram")

    @property
    def n_per_segment(self):
        seg = self.segment_duration
        if seg is None:
            seg = self.duration / 4.0
        return int(round(seg / self.dt))

    @property
    def n_segments(self):
        return max(1, int(self.duration / (self.n_per_segment * self.dt)))

    @property
    def burn_steps(self):
        b = self.burn_in
        if b is None:
            b = 2.0 / max(self.params.gamma, 1e-6)
        return int(round(b / self.dt))

    def _steps_of(self, tau):
        d = int(round(tau / self.dt))
        if abs(d * self.dt - tau) > self.dt / 2.0 + 1e-12:
            raise ValueError(f"delay {tau} not representable at dt={self.dt}")
        return d

    @property
    def delay_steps(self):
        return self._steps_of(self.params.tau)

    @property
    def delay_steps_a(self):
        return self._steps_of(self.params.tau_a)

    @property
    def delay_steps_b(self):
        return self._steps_of(self.params.tau_b)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass
class SpectrumEstimate:
    """Averaged-periodogram estimate of a record spectrum (vacuum = 1
    normalization; stderr is the per-bin 1-sigma statistical error)."""

    omega: np.ndarray
    power: np.ndarray
    stderr: np.ndarray
    n_averages: int


@dataclass
class SingleRunResult:
    times: np.ndarray
    record: np.ndarray
    states: np.ndarray
    spectrum: SpectrumEstimate
    innovation_pvalue: float
    config: MCConfig
    metadata: dict = field(default_factory=dict)


@dataclass
class MutualRunResult:
    omega: np.ndarray
    s_aa: np.ndarray
    s_bb: np.ndarray
    s_ab: np.ndarray
    c_ab: np.ndarray
    stderr_aa: np.ndarray
    stderr_bb: np.ndarray
    stderr_c: np.ndarray
    n_averages: int
    innovation_pvalues: tuple
    config: MCConfig
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# discretization helpers
# ---------------------------------------------------------------------------

def _discretize(a, qc, dt):
    """Exact one-step transition matrix and process-noise covariance
    (van Loan construction)."""
    n = a.shape[0]
    m = np.zeros((2 * n, 2 * n))
    m[:n, :n] = -a
    m[:n, n:] = qc
    m[n:, n:] = a.T
    ph = linalg.expm(m * dt)
    ad = ph[n:, n:].T
    qd = ad @ ph[:n, n:]
    return ad, 0.5 * (qd + qd.T)


def _safe_cholesky(cov):
    """Lower factor of a (possibly rank-deficient) covariance."""
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def _mean_gains(omega_q, gamma, lam, zeta):
    """Continuous stationary gains (k1, k2) of the conditional-mean
    chain: Riccati fixed point of the quantum measurement model (only
    back-action counts as process noise; the thermal force drives the
    mean directly as a known Hamiltonian term)."""
    s, c = math.sin(zeta), math.cos(zeta)
    cross = np.array([[0.0], [_VAC * lam * c]])
    if s == 0.0:
        # amplitude quadrature: the record is the back-action drive
        # itself and the mean integrates it exactly
        return 2.0 * cross[:, 0]
    a = np.array([[0.0, 1.0], [-omega_q ** 2, -2.0 * gamma]])
    cm = np.array([[lam * s, 0.0]])
    q = np.diag([0.0, _VAC * lam ** 2])
    p = linalg.solve_continuous_are(a.T, cm.T, q, np.array([[_VAC]]),
                                    s=cross)
    return (p @ cm.T + cross)[:, 0] / _VAC


def ljung_box(x, lags=20):
    """Ljung-Box portmanteau whiteness statistic and its p-value."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    denom = float(x @ x)
    q = 0.0
    for k in range(1, lags + 1):
        r = float(x[:-k] @ x[k:]) / denom
        q += r * r / (n - k)
    q *= n * (n + 2.0)
    return q, float(stats.chi2.sf(q, lags))


# ---------------------------------------------------------------------------
# fused closed-loop model
# ---------------------------------------------------------------------------

@dataclass
class _Loop:
    """One-step recursion  s' = ad s + chol eps + sum_r psi_r dnu_r(k-d_r)
    where the record and innovation increments are read from integrator
    rows (z_rows, n_rows) of s' and reset to zero each step."""

    ad: np.ndarray
    chol: np.ndarray
    z_rows: list
    n_rows: list
    psi: list          # (nstate, 1) injection map per record, or None
    delays: list
    n_physical: int    # leading rows checked for divergence


def _single_drift(p, d, lam=None, zeta=None, tau=None, offset=0, nst=None,
                  a=None, b_cols=None, col_u=None, coef=0.0):
    """Wire one monitored mass into the fused drift/noise matrices.

    States (at ``offset``): x, p, cx, cp, [mx, mp if d >= 1], nu-int,
    z-int.  Noise columns in ``b_cols``: (a1, a2, fth) for this system.
    ``col_u``/``coef`` attach the classical attraction input column.
    Returns (psi, n_row, z_row) with psi the delayed-injection map.
    """
    lam = p.lam if lam is None else lam
    zeta = p.zeta if zeta is None else zeta
    tau = p.tau if tau is None else tau
    wq2, g2 = p.omega_q ** 2, 2.0 * p.gamma
    s, c = math.sin(zeta), math.cos(zeta)
    k1, k2 = _mean_gains(p.omega_q, p.gamma, lam, zeta)
    nth_b = 2.0 * math.sqrt(max(p.n_th, 0.0))
    o = offset
    ix, ip, icx, icp = o, o + 1, o + 2, o + 3
    n_extra = 2 if d >= 1 else 0
    inu, iz = o + 4 + n_extra, o + 5 + n_extra

    a[ix, ip] = 1.0
    a[ip, ix] = -wq2
    a[ip, ip] = -g2
    # conditional-mean chain, driven by the innovation dnu =
    # (lam sin z)(x - cx) dt + dW_rec
    a[icx, icp] = 1.0
    a[icx, ix] += k1 * lam * s
    a[icx, icx] += -k1 * lam * s
    a[icp, icx] += -wq2
    a[icp, icp] = -g2
    a[icp, ix] += k2 * lam * s
    a[icp, icx] += -k2 * lam * s
    # innovation and record integrators
    a[inu, ix] = lam * s
    a[inu, icx] = -lam * s
    a[iz, ix] = lam * s
    psi = None
    if d >= 1:
        imx, imp = o + 4, o + 5
        a[imx, imp] = 1.0
        a[imp, imx] = -wq2
        a[imp, imp] = -g2
        # delayed-mean gain: the quantum covariance propagated over the
        # latency times the instantaneous gain
        a_q = np.array([[0.0, 1.0], [-wq2, -g2]])
        j = linalg.expm(a_q * tau) @ np.array([k1, k2])
        psi = np.zeros((nst, 1))
        psi[imx:imp + 1, 0] = j
        feed = imx
    else:
        feed = icx
    # classical attraction: every chain of this mass sees the same input
    rows_p = [ip, icp] + ([o + 5] if d >= 1 else [])
    if col_u is not None and coef != 0.0:
        for r in rows_p:
            a[r, col_u] += coef

    ca1, ca2, cfth = b_cols
    b = np.zeros((nst, 3))
    b[ip, 0] = lam
    b[icx, 0], b[icp, 0] = k1 * c, k2 * c
    b[icx, 1], b[icp, 1] = k1 * s, k2 * s
    b[inu, 0], b[inu, 1] = c, s
    b[iz, 0], b[iz, 1] = c, s
    b[ip, 2] = nth_b
    b[icp, 2] = nth_b
    if d >= 1:
        b[o + 5, 2] = nth_b
    return psi, inu, iz, feed, b


def _midpoint(a, psi, dt):
    """Shift a delayed injection to the step midpoint (half-step
    propagation through the fused drift)."""
    if psi is None:
        return None
    return linalg.expm(a * (0.5 * dt)) @ psi


def _build_single(cfg):
    p = cfg.params
    d = cfg.delay_steps
    nst = (8 if d >= 1 else 6)
    a = np.zeros((nst, nst))
    col_u = 4 if d >= 1 else 2
    coef = p.omega_sn ** 2
    psi, inu, iz, _, b = _single_drift(
        p, d, tau=d * cfg.dt, offset=0, nst=nst, a=a, b_cols=(0, 1, 2),
        col_u=(col_u if coef else None), coef=coef)
    qc = _VAC * (b @ b.T)
    ad, qd = _discretize(a, qc, cfg.dt)
    return _Loop(ad, _safe_cholesky(qd), [iz], [inu],
                 [_midpoint(a, psi, cfg.dt)], [d], 4 + (2 if d else 0))


def _build_mutual_ccsn(cfg):
    p = cfg.params
    delays = [cfg.delay_steps_a, cfg.delay_steps_b]
    zetas = [p.zeta_a, p.zeta_b]
    taus = [p.tau_a, p.tau_b]
    sizes = [8 if d >= 1 else 6 for d in delays]
    offs = [0, sizes[0]]
    nst = sum(sizes)
    coef = -p.omega_g ** 2
    a = np.zeros((nst, nst))
    feeds, psis, nrows, zrows, bs = [None, None], [], [], [], []
    # first pass to know each system's feedback column
    feed_cols = [offs[i] + (4 if delays[i] >= 1 else 2) for i in (0, 1)]
    for i in (0, 1):
        other = 1 - i
        psi, inu, iz, _, b = _single_drift(
            p, delays[i], lam=p.lam, zeta=zetas[i],
            tau=delays[i] * cfg.dt,
            offset=offs[i], nst=nst, a=a, b_cols=(0, 1, 2),
            col_u=(feed_cols[other] if coef else None), coef=coef)
        psis.append(psi)
        nrows.append(inu)
        zrows.append(iz)
        bs.append(b)
    b_full = np.zeros((nst, 6))
    b_full[:, 0:3] = bs[0]
    b_full[:, 3:6] = bs[1]
    qc = _VAC * (b_full @ b_full.T)
    ad, qd = _discretize(a, qc, cfg.dt)
    psis = [_midpoint(a, psi, cfg.dt) for psi in psis]
    return _Loop(ad, _safe_cholesky(qd), zrows, nrows, psis, delays,
                 nst - 2 * 2)


def _build_mutual_qg(cfg):
    p = cfg.params
    wq2, g2, wg2 = p.omega_q ** 2, 2.0 * p.gamma, p.omega_g ** 2
    nth_b = 2.0 * math.sqrt(max(p.n_th, 0.0))
    # states: xA pA xB pB zA zB
    a = np.zeros((6, 6))
    a[0, 1] = 1.0
    a[1, 0], a[1, 1], a[1, 2] = -wq2, -g2, -wg2
    a[2, 3] = 1.0
    a[3, 2], a[3, 3], a[3, 0] = -wq2, -g2, -wg2
    b = np.zeros((6, 6))          # noises a1A a2A fthA a1B a2B fthB
    for i, zeta in enumerate(zetas := (p.zeta_a, p.zeta_b)):
        prow, zrow = 1 + 2 * i, 4 + i
        a[zrow, 2 * i] = p.lam * math.sin(zeta)
        b[prow, 3 * i] = p.lam
        b[prow, 3 * i + 2] = nth_b
        b[zrow, 3 * i] = math.cos(zeta)
        b[zrow, 3 * i + 1] = math.sin(zeta)
    ad, qd = _discretize(a, _VAC * (b @ b.T), cfg.dt)
    return _Loop(ad, _safe_cholesky(qd), [4, 5], [4, 5],
                 [None, None], [0, 0], 4)


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

def _run_loop(loop, cfg, n_keep_states):
    """Drive the fused recursion, accumulating boxcar periodograms of
    every record channel.  Returns (omega, psd list, cross or None,
    n_averages, traj-0 records, traj-0 states, traj-0 innovations)."""
    nrec = len(loop.z_rows)
    nst = loop.ad.shape[0]
    ntraj = cfg.n_trajectories
    nper = cfg.n_per_segment
    nseg = cfg.n_segments
    nmain = nper * nseg
    ntotal = cfg.burn_steps + nmain

    rngs = [np.random.Generator(np.random.Philox(seed=[cfg.rng_seed, i]))
            for i in range(ntraj)]
    s = np.zeros((nst, ntraj))
    rings = [np.zeros((d, ntraj)) if d >= 1 else None for d in loop.delays]

    seg_buf = np.zeros((nrec, nper, ntraj))
    # Hann-windowed periodograms: the record spectra span ~4 decades, and
    # boxcar sidelobes of the thermal resonance would bias the tail bins
    # at the percent level (visible beyond ~10^3 segment averages)
    win = 0.5 * (1.0 - np.cos(2.0 * math.pi * np.arange(nper) / nper))
    win_norm = cfg.dt / np.sum(win ** 2)
    psum = [np.zeros(nper) for _ in range(nrec)]
    xsum = np.zeros(nper, dtype=complex) if nrec == 2 else None
    trace_rec = np.zeros((nrec, nmain))
    trace_st = np.zeros((n_keep_states, nmain))
    trace_nu = np.zeros((nrec, nmain))
    zi = np.array(loop.z_rows)
    ni = np.array(loop.n_rows)
    acc = np.concatenate([zi, ni])

    # noise is generated in blocks of `chunk` steps; bound the buffer at
    # ~128k trajectory-steps so large ensembles stay within memory
    chunk = max(16, min(2048, 131072 // max(ntraj, 1)))
    eps = np.empty((nst, chunk, ntraj))
    scale = 1.0 + max(abs(getattr(cfg.params, "n_th", 0.0)), 1.0)
    k = 0
    while k < ntotal:
        m = min(chunk, ntotal - k)
        for i, rg in enumerate(rngs):
            eps[:, :m, i] = rg.standard_normal((nst, m))
        noise = np.einsum("ij,jkt->ikt", loop.chol, eps[:, :m, :])
        for j in range(m):
            s_new = loop.ad @ s + noise[:, j, :]
            for r in range(nrec):
                d = loop.delays[r]
                if d >= 1:
                    ring = loop_ring = rings[r]
                    pos = (k + j) % d
                    s_new += loop.psi[r] * loop_ring[pos]
                    ring[pos] = s_new[ni[r]]
            rec = s_new[zi] / cfg.dt
            nu = s_new[ni].copy()
            s_new[acc] = 0.0
            s = s_new
            idx = k + j - cfg.burn_steps
            if idx >= 0:
                seg_buf[:, idx % nper, :] = rec
                trace_rec[:, idx] = rec[:, 0]
                trace_st[:, idx] = s[:n_keep_states, 0]
                trace_nu[:, idx] = nu[:, 0]
                if (idx + 1) % nper == 0:
                    fhat = np.fft.fft(seg_buf * win[None, :, None], axis=1)
                    pw = np.abs(fhat) ** 2 * win_norm
                    for r in range(nrec):
                        psum[r] += pw[r].sum(axis=1)
                    if xsum is not None:
                        xsum += (fhat[0] * np.conj(fhat[1])).sum(axis=1) \
                            * win_norm
        k += m
        phys = s[:loop.n_physical]
        if not np.all(np.isfinite(phys)) or \
                np.max(np.abs(phys)) > 1e9 * scale:
            raise UnstableLoop(
                f"state diverged by step {k} (|s| up to "
                f"{np.max(np.abs(phys)):.3g}); reduce dt or check params")

    navg = nseg * ntraj
    half = np.arange(1, nper // 2)
    omega = 2.0 * math.pi * half / (nper * cfg.dt)
    psd = [2.0 * q[half] / navg for q in psum]
    cross = 2.0 * xsum[half] / navg if xsum is not None else None
    return omega, psd, cross, navg, trace_rec, trace_st, trace_nu


_META_NOTE = ("exact closed-loop discretization (drift exponential + van "
              "Loan covariance); delayed innovation injected at the step "
              "midpoint, residual bias O(dt^2)")


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def simulate_single(cfg: MCConfig) -> SingleRunResult:
    """Simulate the monitored single mass with conditional self-attraction
    and estimate its record spectrum."""
    if not isinstance(cfg.params, SingleMassParams):
        raise TypeError("simulate_single needs SingleMassParams")
    loop = _build_single(cfg)
    log.info("single-mass MC: %d states, delay %d steps, %d trajectories",
             loop.ad.shape[0], cfg.delay_steps, cfg.n_trajectories)
    omega, psd, _, navg, rec, st, nu = _run_loop(loop, cfg, 2)
    t0 = cfg.burn_steps * cfg.dt
    times = t0 + cfg.dt * np.arange(rec.shape[1])
    spec = SpectrumEstimate(omega, psd[0], psd[0] / math.sqrt(navg), navg)
    _, pval = ljung_box(nu[0])
    meta = {"dt": cfg.dt, "discretization": _META_NOTE}
    return SingleRunResult(times, rec[0], st, spec, pval, cfg, meta)


def simulate_mutual(cfg: MCConfig, model="ccsn") -> MutualRunResult:
    """Simulate the two gravitating monitored masses and estimate the
    auto-, cross- and coherence spectra of the two records."""
    if not isinstance(cfg.params, MutualParams):
        raise TypeError("simulate_mutual needs MutualParams")
    if model == "ccsn":
        loop = _build_mutual_ccsn(cfg)
    elif model == "qg":
        loop = _build_mutual_qg(cfg)
    else:
        raise ValueError(f"unknown model {model!r}")
    log.info("mutual MC (%s): %d states, %d trajectories",
             model, loop.ad.shape[0], cfg.n_trajectories)
    omega, psd, cross, navg, rec, st, nu = _run_loop(loop, cfg, 2)
    saa, sbb = psd
    cab = np.abs(cross) ** 2 / (saa * sbb)
    np.clip(cab, 0.0, 1.0, out=cab)
    err_c = math.sqrt(2.0 / navg) * np.sqrt(cab) * (1.0 - cab)
    pvals = tuple(ljung_box(nu[r])[1] for r in range(2))
    meta = {"dt": cfg.dt, "model": model, "discretization": _META_NOTE}
    return MutualRunResult(omega, saa, sbb, cross, cab,
                           saa / math.sqrt(navg), sbb / math.sqrt(navg),
                           err_c, navg, pvals, cfg, meta)


def variance_decay_mc(p: SingleMassParams, times, *, n_trajectories=2000,
                      dt=0.02, rng_seed=0, settle=None):
    """Ensemble estimate of the post-shut-off conditional variance.

    Simulates the exactly discretized truth + conditional-mean model
    together with the record-only stationary observer, silences the
    measurement at t = 0 and returns (times_actual, ensemble variance of
    x minus its record-conditioned prediction, 1-sigma error).
    """
    if abs(math.cos(p.zeta)) > 1e-12:
        raise ValueError("variance check requires the phase quadrature")
    times = np.asarray(times, dtype=float)
    if np.any(times < 0.0):
        raise ValueError("prediction times must be non-negative")
    wq2, g2, wsn2 = p.omega_q ** 2, 2.0 * p.gamma, p.omega_sn ** 2
    k1, k2 = _mean_gains(p.omega_q, p.gamma, p.lam, p.zeta)
    gl1, gl2 = k1 * p.lam, k2 * p.lam
    nth_b = 2.0 * math.sqrt(max(p.n_th, 0.0))

    # physical + conditional-mean block, measurement on / off
    a_on = np.array([[0.0, 1.0, 0.0, 0.0],
                     [-wq2, -g2, wsn2, 0.0],
                     [gl1, 0.0, -gl1, 1.0],
                     [gl2, 0.0, -1.0 - gl2, -g2]])
    a_off = np.array([[0.0, 1.0, 0.0, 0.0],
                      [-wq2, -g2, wsn2, 0.0],
                      [0.0, 0.0, 0.0, 1.0],
                      [0.0, 0.0, -1.0, -g2]])
    b_on = np.array([[0.0, 0.0, 0.0],
                     [p.lam, 0.0, nth_b],
                     [0.0, k1, 0.0],
                     [0.0, k2, nth_b]])
    # after shut-off the optical drive is gone: no back-action, only the
    # thermal force (shared by the physical mass and the gravity centre)
    b_off = np.array([[0.0], [nth_b], [0.0], [nth_b]])
    c4 = np.array([[p.lam, 0.0, 0.0, 0.0]])

    # record-only total observer: continuous Riccati with the a2 record
    # noise correlated into the mean chain via the gains
    q4 = _VAC * (b_on @ b_on.T)
    s4 = _VAC * b_on[:, 1:2]
    p4 = linalg.solve_continuous_are(a_on.T, c4.T, q4,
                                     np.array([[_VAC]]), s=s4)
    k4 = (p4 @ c4.T + s4)[:, 0] / _VAC

    # fused truth + observer (8 states), exact discretization
    a8 = np.zeros((8, 8))
    a8[:4, :4] = a_on
    a8[4:, 4:] = a_on - np.outer(k4, c4[0])
    a8[4:, :4] = np.outer(k4, c4[0])
    b8 = np.zeros((8, 3))
    b8[:4] = b_on
    b8[4:, 1] = k4                       # observer sees the record noise
    ad8, qd8 = _discretize(a8, _VAC * (b8 @ b8.T), dt)
    l8 = _safe_cholesky(qd8)

    a8_off = np.zeros((8, 8))
    a8_off[:4, :4] = a_off
    a8_off[4:, 4:] = a_off
    b8_off = np.zeros((8, 1))
    b8_off[:4] = b_off
    ad8_off, qd8_off = _discretize(a8_off, _VAC * (b8_off @ b8_off.T), dt)
    l8_off = _safe_cholesky(qd8_off)

    if settle is None:
        settle = 3.0 / max(p.gamma, 1e-6)
    n_settle = int(round(settle / dt))
    steps = np.round(times / dt).astype(int)
    t_actual = steps * dt
    n_post = int(steps.max()) if steps.size else 0

    rng = np.random.Generator(np.random.Philox(seed=[rng_seed, 0]))
    ntr = n_trajectories
    s = np.zeros((8, ntr))
    for _ in range(n_settle):
        s = ad8 @ s + l8 @ rng.standard_normal((8, ntr))
    if not np.all(np.isfinite(s)):
        raise UnstableLoop("settling diverged; reduce dt")

    out = np.empty(times.shape)
    err = np.empty(times.shape)

    def record(j):
        sel = steps == j
        if np.any(sel):
            v = np.var(s[0] - s[4], ddof=1)
            out[sel] = v
            err[sel] = v * math.sqrt(2.0 / (ntr - 1))

    record(0)
    for j in range(1, n_post + 1):
        s = ad8_off @ s + l8_off @ rng.standard_normal((8, ntr))
        record(j)
    return t_actual, out, err
