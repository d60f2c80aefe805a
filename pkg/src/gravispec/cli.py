"""Command-line front end.

Each reporting subcommand writes a UTF-8 CSV (``#``-prefixed metadata
lines, 12-significant-digit scientific notation) and renders a matplotlib
PNG next to it.  Exit codes: 0 success, 2 configuration error, 3
numerical failure.
"""

import argparse
import logging
import math
import shlex
import sys
from dataclasses import replace

import matplotlib
import numpy as np
from scipy import constants

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import __version__
from .detectability import contour_sweep, kl_snr, t_min_estimates
from .errors import GravispecError
from .mc_oracle import MCConfig, simulate_mutual, simulate_single
from .mutual import (
    MutualParams,
    ccsn_spectra,
    correlation_grid,
    mutual_observation_time,
    qg_spectra,
)
from .nonstationary import conditional_variance_trace
from .single_mass import (
    SingleMassParams,
    force_budget,
    frequency_grid,
    measurement_rate_from_optics,
    spectrum_components,
    spectrum_total,
)

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# ---------------------------------------------------------------------------
# presets: embedded reference configurations
# ---------------------------------------------------------------------------
# Each entry is (key, value, unit, note).  The coupling rate is pinned to
# the quoted Lambda whenever the quoted optical stack implies a different
# value; the discrepancy is recorded in the note and in output metadata.

PRESETS = {
    "fig5": dict(kind="single", values=[
        ("mass", 1e-6, "kg", "mirror mass"),
        ("omega_m", TWO_PI * 10e-3, "rad/s", "bare frequency, 10 mHz"),
        ("omega_sn", TWO_PI * 57e-3, "rad/s",
         "self-attraction frequency, 57 mHz (tungsten)"),
        ("q_m", 1e7, "", "mechanical quality factor"),
        ("temperature", 1e-3, "K", "bath temperature, 1 mK"),
        ("lam", TWO_PI * 57e-3, "rad/s",
         "pinned: the optical stack (1 nW, finesse 100, 1064 nm) implies "
         "Lambda/2pi = 0.127 Hz, inconsistent with the quoted 57 mHz; "
         "the quoted coupling is used"),
        ("power", 1e-9, "W", "input-cavity power (informational)"),
        ("finesse", 100.0, "", "cavity finesse (informational)"),
        ("wavelength", 1064e-9, "m", "optical wavelength (informational)"),
    ]),
    "fig8": dict(kind="single", values=[
        ("mass", 1e-6, "kg", "mirror mass"),
        ("omega_m", TWO_PI * 10e-3, "rad/s", "bare frequency, 10 mHz"),
        ("omega_sn", TWO_PI * 57e-3, "rad/s",
         "self-attraction frequency, 57 mHz"),
        ("q_m", 3e6, "", "mechanical quality factor"),
        ("temperature", 300.0, "K",
         "room temperature; implies n_th = 2.0837e8, inconsistent with "
         "the quoted 2e6 (temperature and quality factor are used)"),
        ("lam", TWO_PI * 350.0, "rad/s",
         "strong measurement, 350 Hz (consistent with the optical stack)"),
        ("power", 1e-3, "W", "input-cavity power (informational)"),
        ("finesse", 275.0, "", "cavity finesse (informational)"),
        ("wavelength", 1064e-9, "m", "optical wavelength (informational)"),
    ]),
    "fig9": dict(kind="single", values=[
        ("mass", 1e-3, "kg", "mirror mass"),
        ("omega_m", TWO_PI * 100e-3, "rad/s", "bare frequency, 100 mHz"),
        ("omega_sn", TWO_PI * 57e-3, "rad/s",
         "self-attraction frequency, 57 mHz"),
        ("q_m", 3e7, "", "mechanical quality factor"),
        ("temperature", 0.3, "K", "bath temperature, 300 mK"),
        ("lam", TWO_PI * 400.0, "rad/s",
         "strong measurement, 400 Hz (consistent with the optical stack)"),
        ("power", 0.1, "W", "input-cavity power (informational)"),
        ("finesse", 1000.0, "", "cavity finesse (informational)"),
        ("wavelength", 1064e-9, "m", "optical wavelength (informational)"),
    ]),
    "table5": dict(kind="mutual", values=[
        ("mass", 1e-3, "kg", "mirror mass, each of the pair"),
        ("omega_m", TWO_PI * 10e-3, "rad/s", "bare frequency, 10 mHz"),
        ("omega_g", TWO_PI * 2e-4, "rad/s",
         "mutual coupling frequency, 0.2 mHz"),
        ("q_m", 10e-3 / 1.67e-8, "",
         "quality factor from full damping 2 gamma/2pi = 1.67e-8 Hz"),
        ("temperature", 300.0, "K", "room temperature"),
        ("lam", TWO_PI * 350.0, "rad/s",
         "pinned: the optical stack (2 kW, finesse 4000, 1064 nm) implies "
         "Lambda/2pi = 2.3e5 Hz; the quoted 350 Hz is used"),
        ("power", 2000.0, "W", "input-cavity power (informational)"),
        ("finesse", 4000.0, "", "cavity finesse (informational)"),
        ("wavelength", 1064e-9, "m", "optical wavelength (informational)"),
    ]),
}


def _preset_dict(name):
    return {k: v for k, v, _, _ in PRESETS[name]["values"]}


def _preset_notes(name):
    return ["preset %s: %s = %.6g %s  (%s)" % (name, k, v, u, note)
            for k, v, u, note in PRESETS[name]["values"]]


# ---------------------------------------------------------------------------
# parameter resolution
# ---------------------------------------------------------------------------

def _resolve_single(args):
    """SingleMassParams plus the SI values used, from preset + overrides."""
    si = {}
    if args.preset is not None:
        if PRESETS[args.preset]["kind"] != "single":
            raise ValueError("preset %r is not a single-mass configuration"
                             % args.preset)
        si.update(_preset_dict(args.preset))
        si.pop("power"), si.pop("finesse"), si.pop("wavelength")
    for key, flag in (("mass", args.mass_kg),
                      ("omega_m", None if args.omega_m_hz is None
                       else TWO_PI * args.omega_m_hz),
                      ("omega_sn", None if args.omega_sn_hz is None
                       else TWO_PI * args.omega_sn_hz),
                      ("q_m", args.q_m),
                      ("temperature", args.temperature_k)):
        if flag is not None:
            si[key] = flag
    optics = (args.power_w, args.finesse, args.wavelength_m)
    if args.lam_hz is not None and any(v is not None for v in optics):
        raise ValueError("give exactly one of --lam-hz or the optical "
                         "stack (--power-w, --finesse, --wavelength-m)")
    if args.lam_hz is not None:
        si["lam"] = TWO_PI * args.lam_hz
    elif any(v is not None for v in optics):
        if any(v is None for v in optics):
            raise ValueError("--power-w, --finesse and --wavelength-m are "
                             "all required to derive the coupling")
        si.pop("lam", None)
        si["lam"] = measurement_rate_from_optics(si["mass"], *optics)
    missing = [k for k in ("mass", "omega_m", "omega_sn", "q_m",
                           "temperature", "lam") if k not in si]
    if missing:
        raise ValueError("missing parameters (give --preset or flags): %s"
                         % ", ".join(sorted(missing)))
    p = SingleMassParams.from_si(
        mass=si["mass"], omega_m=si["omega_m"], omega_sn=si["omega_sn"],
        q_m=si["q_m"], temperature=si["temperature"], lam=si["lam"],
        zeta=args.zeta, tau=args.tau_s)
    return p, si


def _resolve_mutual(args):
    si = dict(_preset_dict(args.preset))
    si.pop("power"), si.pop("finesse"), si.pop("wavelength")
    if args.temperature_k is not None:
        si["temperature"] = args.temperature_k
    if args.lam_hz is not None:
        si["lam"] = TWO_PI * args.lam_hz
    p = MutualParams.from_si(
        mass=si["mass"], omega_m=si["omega_m"], omega_g=si["omega_g"],
        q_m=si["q_m"], temperature=si["temperature"], lam=si["lam"],
        zeta_a=args.zeta_a, zeta_b=args.zeta_b,
        tau_a=args.tau_s, tau_b=args.tau_s)
    return p, si


def _param_meta(p, si, preset):
    lines = ["version = %s" % __version__]
    if preset:
        lines.append("preset = %s" % preset)
        lines.extend(_preset_notes(preset))
    for key, val in sorted(si.items()):
        lines.append("si %s = %.12e" % (key, val))
    for field, val in sorted(vars(p).items()):
        lines.append("scaled %s = %.12e" % (field, val))
    return lines


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(x):
    return "%.11e" % float(x)


def write_csv(path, meta_lines, columns, arrays):
    arrays = [np.asarray(a, dtype=float) for a in arrays]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# gravispec %s\n" % __version__)
        for line in meta_lines:
            fh.write("# %s\n" % line)
        fh.write(",".join(columns) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    log.info("wrote %s (%d rows)", path, arrays[0].size)


def _png_path(csv_path):
    return (csv_path[:-4] if csv_path.endswith(".csv") else csv_path) + ".png"


def save_figure(fig, csv_path):
    png = _png_path(csv_path)
    fig.savefig(png, dpi=150, bbox_inches="tight")
    plt.close(fig)
    log.info("wrote %s", png)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_single_spectrum(args, meta):
    p, si = _resolve_single(args)
    w = _single_grid(p, args)
    comp = spectrum_components(p, w, model="ccsn")
    total_sn = spectrum_total(p, w, model="ccsn")
    total_qg = spectrum_total(p, w, model="qg")
    f_hz = w * p.omega_m_si / TWO_PI
    meta += _param_meta(p, si, args.preset)
    write_csv(args.out, meta,
              ["f_hz", "s_total_ccsn", "s_total_qg", "s_shot",
               "s_backaction", "s_thermal", "s_sn"],
              [f_hz, total_sn, total_qg, comp["shot"], comp["backaction"],
               comp["thermal"], comp["sn"]])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(f_hz, total_qg, label="no self-attraction")
    ax.loglog(f_hz, total_sn, "--", label="conditional self-attraction")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("record spectrum (shot-noise units)")
    ax.legend()
    save_figure(fig, args.out)
    return 0


def cmd_single_budget(args, meta):
    p, si = _resolve_single(args)
    w = _single_grid(p, args)
    budget = force_budget(p, w)
    omega_si = w * p.omega_m_si
    scale = np.sqrt(TWO_PI / (omega_si * args.t_obs_s))
    s_qg = (budget["shot"] + budget["backaction"]) * scale
    s_th = budget["thermal"] * scale
    s_sn = np.abs(budget["sn"])
    f_hz = omega_si / TWO_PI
    meta += ["t_obs_s = %.12e" % args.t_obs_s,
             "rho2_sn = %.12e" % kl_snr(p, args.t_obs_s),
             "columns are force-referred, units hbar M omega_m^2; qg and "
             "thermal are resolution-scaled by sqrt(2 pi/(omega T_obs))"]
    meta += _param_meta(p, si, args.preset)
    write_csv(args.out, meta,
              ["f_hz", "s_qg_scaled", "s_th_scaled", "s_sn", "sum"],
              [f_hz, s_qg, s_th, s_sn, s_qg + s_th])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(f_hz, s_qg, label="quantum (scaled)")
    ax.loglog(f_hz, s_th, label="thermal (scaled)")
    ax.loglog(f_hz, s_qg + s_th, label="sum")
    ax.loglog(f_hz, s_sn, "k--", label="self-attraction shift")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("force noise (hbar M omega_m^2)")
    ax.legend()
    save_figure(fig, args.out)
    return 0


def _parse_axis(spec):
    field, lo, hi, n = spec.split(",")
    return field, np.geomspace(float(lo), float(hi), int(n))


def cmd_single_contour(args, meta):
    p, si = _resolve_single(args)
    axis1 = _parse_axis(args.axis1)
    axis2 = _parse_axis(args.axis2)
    taus_s = np.asarray([float(t) for t in args.tau_list_s.split(",")])
    sweep = contour_sweep(p, axis1, axis2, taus_s * p.omega_m_si)
    a1, a2, tt = np.meshgrid(sweep.axis1_values, sweep.axis2_values,
                             taus_s, indexing="ij")
    meta += ["axis1 = %s (scaled)" % sweep.axis1_name,
             "axis2 = %s (scaled)" % sweep.axis2_name,
             "t_required is the observation time (s) for unit "
             "distinguishability"]
    meta += _param_meta(p, si, args.preset)
    write_csv(args.out, meta,
              [sweep.axis1_name, sweep.axis2_name, "tau_s", "t_required_s"],
              [a1.ravel(), a2.ravel(), tt.ravel(),
               sweep.t_required.ravel()])
    fig, ax = plt.subplots(figsize=(6, 4))
    with np.errstate(divide="ignore"):
        z = np.log10(sweep.t_required[:, :, 0]).T
    pcm = ax.pcolormesh(sweep.axis1_values, sweep.axis2_values, z,
                        shading="nearest")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("%s (scaled)" % sweep.axis1_name)
    ax.set_ylabel("%s (scaled)" % sweep.axis2_name)
    fig.colorbar(pcm, ax=ax, label="log10 T_required (s), first latency")
    save_figure(fig, args.out)
    return 0


def cmd_nonstationary(args, meta):
    p, si = _resolve_single(args)
    t_s = np.linspace(0.0, args.t_max_s, args.n_points)
    tr = conditional_variance_trace(p, t_s * p.omega_m_si)
    to_m2 = constants.hbar / (si["mass"] * p.omega_m_si)
    meta += ["variance unit hbar/(M omega_m) = %.12e m^2" % to_m2,
             "*_m2 columns are laboratory units; *_scaled columns are "
             "zero-point-normalized (vacuum position variance = 0.5)"]
    meta += _param_meta(p, si, args.preset)
    write_csv(args.out, meta,
              ["t_s", "v_quantum_m2", "v_classical_m2", "v_total_m2",
               "v_total_reference_m2", "v_total_scaled",
               "v_total_reference_scaled"],
              [t_s, tr.v_quantum * to_m2, tr.v_classical * to_m2,
               tr.v_total * to_m2, tr.reference.v_total * to_m2,
               tr.v_total, tr.reference.v_total])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(t_s, tr.v_total * to_m2, "k", label="total")
    ax.semilogy(t_s, tr.v_quantum * to_m2, label="quantum")
    ax.semilogy(t_s, tr.v_classical * to_m2, label="classical")
    ax.semilogy(t_s, tr.reference.v_total * to_m2, "k--",
                label="no self-attraction")
    ax.set_xlabel("prediction time (s)")
    ax.set_ylabel("conditional variance (m^2)")
    ax.legend()
    save_figure(fig, args.out)
    return 0


def cmd_mutual_spectrum(args, meta):
    p, si = _resolve_mutual(args)
    w = correlation_grid(p)
    qg = qg_spectra(p, w)
    sn = ccsn_spectra(p, w)
    f_hz = w * p.omega_m_si / TWO_PI
    meta += _param_meta(p, si, args.preset)
    write_csv(args.out, meta,
              ["f_hz", "c_ab_qg", "c_ab_ccsn", "s_aa_ccsn", "s_bb_ccsn",
               "s_ab_abs_ccsn"],
              [f_hz, qg.c_ab, sn.c_ab, sn.s_aa, sn.s_bb, np.abs(sn.s_ab)])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(f_hz, qg.c_ab, label="quantized coupling")
    ax.plot(f_hz, sn.c_ab, "--", label="conditional coupling")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("normalized correlation")
    ax.set_xlim(p.omega_q * p.omega_m_si / TWO_PI * np.array([0.99, 1.01]))
    ax.legend()
    save_figure(fig, args.out)
    return 0


def cmd_mutual_contour(args, meta):
    p, si = _resolve_mutual(args)
    t_lo, t_hi, t_n = args.temperature_grid.split(",")
    temps = np.geomspace(float(t_lo), float(t_hi), int(t_n))
    taus_s = np.asarray([float(t) for t in args.tau_list_s.split(",")])
    rows_t, rows_tau, rows_obs, rows_est = [], [], [], []
    for temp in temps:
        cell = replace(p, n_th=p.n_th * temp / si["temperature"])
        obs = mutual_observation_time(cell, taus_s * p.omega_m_si)
        rows_t.append(np.full(taus_s.size, temp))
        rows_tau.append(taus_s)
        rows_obs.append(obs.t_exact)
        rows_est.append(np.full(taus_s.size, obs.t_estimate))
    meta += _param_meta(p, si, args.preset)
    write_csv(args.out, meta,
              ["temperature_k", "tau_s", "t_obs_s", "t_estimate_s"],
              [np.concatenate(rows_t), np.concatenate(rows_tau),
               np.concatenate(rows_obs), np.concatenate(rows_est)])
    fig, ax = plt.subplots(figsize=(6, 4))
    for temp, obs in zip(temps, rows_obs):
        ax.loglog(np.maximum(taus_s, taus_s[taus_s > 0].min() / 10
                             if np.any(taus_s > 0) else 1e-3),
                  obs, marker="o", label="T = %.3g K" % temp)
    ax.set_xlabel("measurement latency (s)")
    ax.set_ylabel("required observation time (s)")
    ax.legend(fontsize=7)
    save_figure(fig, args.out)
    return 0


def cmd_mc_validate(args, meta):
    meta += ["mode = %s" % args.mode, "seed = %d" % args.seed]
    if args.mode == "single":
        p = SingleMassParams(omega_sn=args.omega_sn, gamma=args.gamma,
                             lam=args.lam, n_th=args.n_th,
                             zeta=math.pi / 2, tau=args.tau)
        cfg = MCConfig(p, dt=args.dt, duration=args.duration,
                       n_trajectories=args.trajectories, rng_seed=args.seed,
                       segment_duration=args.segment_s, burn_in=args.burn_in)
        res = simulate_single(cfg)
        sp = res.spectrum
        ana = spectrum_total(p, sp.omega, model="ccsn")
        dev = (sp.power - ana) / sp.stderr
        frac = float(np.mean(np.abs(dev) < 3.0))
        meta += ["n_averages = %d" % sp.n_averages,
                 "fraction_within_3_sigma = %.4f" % frac,
                 "innovation_whiteness_pvalue = %.4e"
                 % res.innovation_pvalue,
                 res.metadata["discretization"]]
        for field, val in sorted(vars(p).items()):
            meta.append("scaled %s = %.12e" % (field, val))
        write_csv(args.out, meta,
                  ["omega", "s_mc", "stderr", "s_analytic", "dev_sigma"],
                  [sp.omega, sp.power, sp.stderr, ana, dev])
        fig, axes = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
        axes[0].loglog(sp.omega, sp.power, ".", ms=2, label="simulated")
        axes[0].loglog(sp.omega, ana, "k", lw=1, label="analytic")
        axes[0].set_ylabel("record spectrum")
        axes[0].legend()
        axes[1].semilogx(sp.omega, dev, ".", ms=2)
        axes[1].axhspan(-3, 3, alpha=0.2)
        axes[1].set_xlabel("scaled frequency")
        axes[1].set_ylabel("deviation (sigma)")
        save_figure(fig, args.out)
        print("mc-validate single: %.1f%% of bins within 3 sigma "
              "(n_averages=%d)" % (100 * frac, sp.n_averages))
    else:
        p = MutualParams(omega_g=args.omega_g, gamma=args.gamma,
                         lam=args.lam, n_th=args.n_th,
                         tau_a=args.tau, tau_b=args.tau)
        cfg = MCConfig(p, dt=args.dt, duration=args.duration,
                       n_trajectories=args.trajectories, rng_seed=args.seed,
                       segment_duration=args.segment_s, burn_in=args.burn_in)
        res = simulate_mutual(cfg, model=args.model)
        ana = (ccsn_spectra if args.model == "ccsn" else qg_spectra)(
            p, res.omega)
        dev_a = (res.s_aa - ana.s_aa) / res.stderr_aa
        dev_b = (res.s_bb - ana.s_bb) / res.stderr_bb
        frac = float(np.mean([np.mean(np.abs(dev_a) < 3.0),
                              np.mean(np.abs(dev_b) < 3.0)]))
        meta += ["model = %s" % args.model,
                 "n_averages = %d" % res.n_averages,
                 "fraction_within_3_sigma = %.4f" % frac,
                 res.metadata["discretization"]]
        for field, val in sorted(vars(p).items()):
            meta.append("scaled %s = %.12e" % (field, val))
        write_csv(args.out, meta,
                  ["omega", "s_aa_mc", "s_aa_analytic", "dev_aa_sigma",
                   "s_bb_mc", "s_bb_analytic", "dev_bb_sigma",
                   "c_ab_mc", "c_ab_analytic"],
                  [res.omega, res.s_aa, ana.s_aa, dev_a,
                   res.s_bb, ana.s_bb, dev_b, res.c_ab,
                   np.abs(ana.s_ab) ** 2 / (ana.s_aa * ana.s_bb)])
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.loglog(res.omega, res.s_bb, ".", ms=2, label="S_BB simulated")
        ax.loglog(res.omega, ana.s_bb, "k", lw=1, label="S_BB analytic")
        ax.set_xlabel("scaled frequency")
        ax.set_ylabel("record spectrum")
        ax.legend()
        save_figure(fig, args.out)
        print("mc-validate mutual/%s: %.1f%% of bins within 3 sigma "
              "(n_averages=%d)" % (args.model, 100 * frac, res.n_averages))
    return 0


def cmd_show_presets(args, meta):
    for name, entry in PRESETS.items():
        kind = ("single-mass" if entry["kind"] == "single" else "two-mass")
        print("%s  (%s configuration)" % (name, kind))
        for key, val, unit, note in entry["values"]:
            print("  %-12s = %-14.6g %-6s # %s" % (key, val, unit, note))
        print()
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_single_params(sp, default_preset=None):
    sp.add_argument("--preset", choices=sorted(PRESETS),
                    default=default_preset)
    sp.add_argument("--mass-kg", type=float)
    sp.add_argument("--omega-m-hz", type=float,
                    help="bare mechanical frequency (Hz)")
    sp.add_argument("--omega-sn-hz", type=float,
                    help="self-attraction frequency (Hz)")
    sp.add_argument("--q-m", type=float)
    sp.add_argument("--temperature-k", type=float)
    sp.add_argument("--lam-hz", type=float,
                    help="measurement coupling Lambda/2pi (Hz); exclusive "
                         "with the optical stack")
    sp.add_argument("--power-w", type=float)
    sp.add_argument("--finesse", type=float)
    sp.add_argument("--wavelength-m", type=float)
    sp.add_argument("--zeta", type=float, default=math.pi / 2,
                    help="homodyne angle (rad)")
    sp.add_argument("--tau-s", type=float, default=0.0,
                    help="measurement latency (s)")


def _add_grid(sp):
    sp.add_argument("--f-min-hz", type=float)
    sp.add_argument("--f-max-hz", type=float)
    sp.add_argument("--n-points", type=int, default=400)


def _single_grid(p, args):
    w_min = (None if args.f_min_hz is None
             else TWO_PI * args.f_min_hz / p.omega_m_si)
    w_max = (None if args.f_max_hz is None
             else TWO_PI * args.f_max_hz / p.omega_m_si)
    return frequency_grid(p, w_min=w_min, w_max=w_max, n_log=args.n_points)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gravispec",
        description="Spectral signatures of conditionally-sourced "
                    "classical gravity in monitored optomechanics.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("single-spectrum",
                        help="record noise spectrum of one mass")
    _add_single_params(sp)
    _add_grid(sp)
    sp.add_argument("--out", default="single_spectrum.csv")
    sp.set_defaults(func=cmd_single_spectrum)

    sp = sub.add_parser("single-budget",
                        help="force-referred noise budget of one mass")
    _add_single_params(sp, default_preset="fig5")
    _add_grid(sp)
    sp.add_argument("--t-obs-s", type=float, default=1e4)
    sp.add_argument("--out", default="single_budget.csv")
    sp.set_defaults(func=cmd_single_budget)

    sp = sub.add_parser("single-contour",
                        help="required observation time over a grid")
    _add_single_params(sp, default_preset="fig5")
    sp.add_argument("--axis1", default="lam,0.5,50.0,9",
                    help="scaled field sweep: name,min,max,n (log)")
    sp.add_argument("--axis2", default="n_th,10.0,1e5,9")
    sp.add_argument("--tau-list-s", default="0.0",
                    help="comma-separated latencies (s)")
    sp.add_argument("--out", default="single_contour.csv")
    sp.set_defaults(func=cmd_single_contour)

    sp = sub.add_parser("nonstationary",
                        help="conditional variance after shut-off")
    _add_single_params(sp, default_preset="fig9")
    sp.add_argument("--t-max-s", type=float, default=15.0)
    sp.add_argument("--n-points", type=int, default=400)
    sp.add_argument("--out", default="nonstationary.csv")
    sp.set_defaults(func=cmd_nonstationary)

    sp = sub.add_parser("mutual-spectrum",
                        help="two-mass correlation spectra")
    sp.add_argument("--preset", choices=["table5"], default="table5")
    sp.add_argument("--temperature-k", type=float)
    sp.add_argument("--lam-hz", type=float)
    sp.add_argument("--zeta-a", type=float, default=0.0)
    sp.add_argument("--zeta-b", type=float, default=math.pi / 2)
    sp.add_argument("--tau", "--tau-s", dest="tau_s", type=float,
                    default=0.0)
    sp.add_argument("--out", default="mutual_spectrum.csv")
    sp.set_defaults(func=cmd_mutual_spectrum)

    sp = sub.add_parser("mutual-contour",
                        help="two-mass observation time vs temperature "
                             "and latency")
    sp.add_argument("--preset", choices=["table5"], default="table5")
    sp.add_argument("--temperature-k", type=float)
    sp.add_argument("--lam-hz", type=float)
    sp.add_argument("--zeta-a", type=float, default=0.0)
    sp.add_argument("--zeta-b", type=float, default=math.pi / 2)
    sp.add_argument("--tau", "--tau-s", dest="tau_s", type=float,
                    default=0.0)
    sp.add_argument("--temperature-grid", default="3,300,5",
                    help="min,max,n (K, log)")
    sp.add_argument("--tau-list-s", default="0.0,0.001,0.1,1.0")
    sp.add_argument("--out", default="mutual_contour.csv")
    sp.set_defaults(func=cmd_mutual_contour)

    sp = sub.add_parser("mc-validate",
                        help="Monte-Carlo cross-check of the analytic "
                             "spectra (scaled units)")
    sp.add_argument("--mode", choices=["single", "mutual"],
                    default="single")
    sp.add_argument("--model", choices=["ccsn", "qg"], default="ccsn")
    sp.add_argument("--omega-sn", type=float, default=0.8)
    sp.add_argument("--omega-g", type=float, default=0.2)
    sp.add_argument("--gamma", type=float, default=0.02)
    sp.add_argument("--lam", type=float, default=1.5)
    sp.add_argument("--n-th", type=float, default=2.0)
    sp.add_argument("--tau", type=float, default=0.0)
    sp.add_argument("--dt", type=float, default=0.05)
    sp.add_argument("--duration", type=float, default=3000.0)
    sp.add_argument("--segment-s", type=float, default=1000.0,
                    dest="segment_s")
    sp.add_argument("--burn-in", type=float, default=100.0)
    sp.add_argument("--trajectories", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="mc_validate.csv")
    sp.set_defaults(func=cmd_mc_validate)

    sp = sub.add_parser("show-presets",
                        help="list the embedded reference configurations")
    sp.set_defaults(func=cmd_show_presets)
    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    meta = ["command: gravispec " + shlex.join(argv)]
    try:
        return args.func(args, meta)
    except (ValueError, KeyError) as exc:
        print("error: config: %s" % exc, file=sys.stderr)
        return 2
    except GravispecError as exc:
        print("error: numerical: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
