"""Result persistence: headered CSV, JSON reports, and flat binary field blocks.

Every emitted file begins with a header line recording the config hash and
the master seed, so any output can be traced back to its exact inputs.
Floats are written with 17 significant digits; reruns with identical config
and seed reproduce outputs byte for byte.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .harness import AuditReport, SweepReport, TailReport
from .skeleton import Trajectory


def header_line(config_hash: str, master_seed: int) -> str:
    return f"# config_sha256={config_hash} master_seed={master_seed}\n"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory_csv(path: str, traj: Trajectory, config_hash: str,
                         master_seed: int):
    """Columns: t, l2, grad_l2, l2sigma2 (the L^(2 sigma + 2) norm)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config_hash, master_seed))
        fh.write("t,l2,grad_l2,l2sigma2\n")
        for t, nr in zip(traj.times, traj.norms):
            lp = next(iter(nr.lp.values())) if nr.lp else float("nan")
            fh.write(f"{_fmt(t)},{_fmt(nr.l2)},{_fmt(nr.grad_l2)},{_fmt(lp)}\n")


def write_fields_bin(path: str, traj: Trajectory, config_hash: str,
                     master_seed: int):
    """Flat binary block of the complex mode coefficients.

    Layout after the ASCII header line: three little-endian uint64
    (n1, n2, count), then count * n1 * n2 interleaved (re, im) float64 LE,
    states in time order, row-major modes.
    """
    basis = traj.states[0].basis
    with open(path, "wb") as fh:
        fh.write(header_line(config_hash, master_seed).encode("utf-8"))
        fh.write(struct.pack("<QQQ", basis.n1, basis.n2, len(traj.states)))
        for st in traj.states:
            inter = np.empty(st.modes.size * 2)
            flat = st.modes.ravel()
            inter[0::2] = flat.real
            inter[1::2] = flat.imag
            fh.write(inter.astype("<f8").tobytes())


def read_fields_bin(path: str) -> tuple[str, np.ndarray]:
    """Return (header line, modes array of shape (count, n1, n2))."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("utf-8")
        n1, n2, count = struct.unpack("<QQQ", fh.read(24))
        raw = np.frombuffer(fh.read(count * n1 * n2 * 16), dtype="<f8")
    cplx = raw[0::2] + 1j * raw[1::2]
    return header, cplx.reshape(count, n1, n2)


def write_json(path: str, payload: dict, config_hash: str, master_seed: int):
    """JSON report whose first key is the provenance header."""
    doc = {"header": {"config_sha256": config_hash, "master_seed": master_seed}}
    doc.update(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def write_event_log(path: str, event_log: list, config_hash: str, master_seed: int):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config_hash, master_seed))
        fh.write("t,mark,pre_l2,post_l2\n")
        for t, mark, pre, post in event_log:
            fh.write(f"{_fmt(t)},{mark},{_fmt(pre)},{_fmt(post)}\n")


def write_sweep_csv(path: str, report: SweepReport, config_hash: str,
                    master_seed: int):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config_hash, master_seed))
        fh.write("eps,mean_sup_sq,se_sup_sq,mean_grad_int,se_grad_int,"
                 "mean_lp_int,se_lp_int,n_samples\n")
        for c in report.cells:
            fh.write(",".join([_fmt(c.eps), _fmt(c.mean_sup_sq), _fmt(c.se_sup_sq),
                               _fmt(c.mean_grad_int), _fmt(c.se_grad_int),
                               _fmt(c.mean_lp_int), _fmt(c.se_lp_int),
                               str(c.n_samples)]) + "\n")


def write_tail_csv(path: str, report: TailReport, config_hash: str,
                   master_seed: int):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(config_hash, master_seed))
        fh.write("eps,n_samples,hits,p_hat,eps_log_p,se_eps_log_p,"
                 "wilson_low,wilson_high,censored\n")
        for c in report.cells:
            fh.write(",".join([_fmt(c.eps), str(c.n_samples), str(c.hits),
                               _fmt(c.p_hat), _fmt(c.eps_log_p),
                               _fmt(c.se_eps_log_p), _fmt(c.wilson_low),
                               _fmt(c.wilson_high), str(int(c.censored))]) + "\n")


def audit_payload(report: AuditReport) -> dict:
    return {
        "sup_l2_sq": report.sup_l2_sq,
        "int_grad_sq": report.int_grad_sq,
        "int_lp": report.int_lp,
        "energy_total": report.energy_total,
        "energy_bound": report.energy_bound,
        "energy_ok": report.energy_ok,
        "sup_grad_p": report.sup_grad_p,
        "int_gradp2_lap": report.int_gradp2_lap,
        "int_mixed": report.int_mixed,
        "grad_total": report.grad_total,
        "grad_bound": report.grad_bound,
        "grad_ok": report.grad_ok,
        "violations": report.violations,
    }


def ensure_dir(path: str):
    os.makedirs(path, exist_ok=True)
