"""CSV serialization, config-file parsing and gnuplot script emission.

Numbers are written with 17 significant digits so every float survives a
write/read cycle bit for bit. Files are UTF-8 with LF line endings.
"""

import configparser
import csv
import io
import math

import numpy as np

from .continuation import Branch, BranchPoint, Event
from .errors import ConfigError
from .models import PlanarState, ThrustState
from .simulate import Trajectory
from .spectral import EquilibriumClass, Spectrum

TRAJECTORY_COLUMNS = ["t", "psi", "r", "phi", "k", "eta", "R_m", "V_mps", "accel_mps2", "termination"]
PORTRAIT_COLUMNS = ["traj_id", "psi", "r", "phi", "error"]


def fmt(x):
    if x is None:
        return ""
    return format(float(x), ".17g")


def _num(s):
    return None if s == "" else float(s)


def _writer(f):
    return csv.writer(f, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)


def _open_out(target):
    if hasattr(target, "write"):
        return target, False
    return open(target, "w", encoding="utf-8", newline=""), True


def _open_in(source):
    if hasattr(source, "read"):
        return source, False
    return open(source, encoding="utf-8", newline=""), True


# Branches

def branch_columns(model):
    state = ["r", "phi"] if model == "planar" else ["r", "phi", "k"]
    n = len(state)
    eig = [f"{part}_l{i}" for i in range(1, n + 1) for part in ("re", "im")]
    return ["arclength", "param", *state, *eig, "class", "event"]


def _branch_row(model, arclength, param, state, spectrum, kind, event):
    vals = [state.r, state.phi] + ([state.k] if model == "thrust" else [])
    eig = []
    for ev in spectrum.eigenvalues:
        eig += [ev.real, ev.imag]
    return [fmt(arclength), fmt(param), *map(fmt, vals), *map(fmt, eig), kind, event]


def write_branch_csv(branch, target):
    """Branch points in order, with refined events interleaved by arclength (``event`` column set)."""
    f, close = _open_out(target)
    try:
        w = _writer(f)
        w.writerow(branch_columns(branch.model))
        rows = [(p.arclength, 0, _branch_row(branch.model, p.arclength, p.param, p.state, p.spectrum,
                                             p.eq_class.kind, "")) for p in branch.points]
        rows += [(e.arclength, 1, _branch_row(branch.model, e.arclength, e.param, e.state, e.spectrum,
                                              e.eq_class.kind, e.kind)) for e in branch.events]
        for _, _, row in sorted(rows, key=lambda r: (r[0], r[1])):
            w.writerow(row)
    finally:
        if close:
            f.close()


def _spectrum_from_eigs(eigs):
    tr = float(sum(ev.real for ev in eigs))
    prod = complex(1.0)
    for ev in eigs:
        prod *= ev
    disc = complex(1.0)
    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            disc *= (eigs[i] - eigs[j]) ** 2
    return Spectrum(tuple(eigs), tr, prod.real, disc.real, math.nan)


def read_branch_csv(source):
    f, close = _open_in(source)
    try:
        reader = csv.reader(f)
        header = next(reader)
        model = "thrust" if "k" in header else "planar"
        if header != branch_columns(model):
            raise ValueError(f"unexpected branch header {header}")
        n = 2 if model == "planar" else 3
        branch = Branch(model)
        for row in reader:
            arclength, param = float(row[0]), float(row[1])
            vals = [float(x) for x in row[2:2 + n]]
            eig_raw = [float(x) for x in row[2 + n:2 + 3 * n]]
            eigs = [complex(eig_raw[2 * i], eig_raw[2 * i + 1]) for i in range(n)]
            kind, event = row[2 + 3 * n], row[3 + 3 * n]
            state = PlanarState(*vals) if model == "planar" else ThrustState(*vals)
            spectrum = _spectrum_from_eigs(eigs)
            cls = EquilibriumClass(kind, math.nan)
            if event:
                idx = len(branch.points) - 1
                branch.events.append(Event((idx, idx + 1), event, param, state, arclength, spectrum, cls))
            else:
                branch.points.append(BranchPoint(state, param, spectrum, cls, arclength,
                                                 np.array([*vals, param]), np.full(n + 1, np.nan)))
        return branch
    finally:
        if close:
            f.close()


def write_events_summary(branch, target):
    f, close = _open_out(target)
    try:
        f.write(f"# model = {branch.model}\n")
        f.write(f"# termination = {branch.termination}\n")
        if branch.limit_point is not None:
            f.write(f"# limit_point = {fmt(branch.limit_point[0])} {fmt(branch.limit_point[1])}\n")
        w = _writer(f)
        cols = ["kind", "param", "r", "phi"] + (["k"] if branch.model == "thrust" else []) + ["class"]
        w.writerow(cols)
        for e in branch.events:
            vals = [e.state.r, e.state.phi] + ([e.state.k] if branch.model == "thrust" else [])
            w.writerow([e.kind, fmt(e.param), *map(fmt, vals), e.eq_class.kind if e.eq_class else ""])
    finally:
        if close:
            f.close()


# Trajectories

def write_trajectory_csv(traj, target):
    """Write every sample of ``traj`` (resample it first for uniform output)."""
    f, close = _open_out(target)
    try:
        w = _writer(f)
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(traj.psi)):
            s = traj.states[i]
            k = s[2] if traj.model == "thrust" else traj.k
            eta = traj.eta[i] if traj.eta is not None else None
            dim = traj.dimensional[i] if traj.dimensional is not None else (None,) * 4
            w.writerow([fmt(dim[0]), fmt(traj.psi[i]), fmt(s[0]), fmt(s[1]), fmt(k), fmt(eta),
                        fmt(dim[1]), fmt(dim[2]), fmt(dim[3]), traj.termination])
    finally:
        if close:
            f.close()


def read_trajectory_csv(source):
    f, close = _open_in(source)
    try:
        reader = csv.reader(f)
        header = next(reader)
        if header != TRAJECTORY_COLUMNS:
            raise ValueError(f"unexpected trajectory header {header}")
        rows = list(reader)
    finally:
        if close:
            f.close()
    if not rows:
        raise ValueError("trajectory file has no samples")
    cols = list(zip(*rows))
    thrust = cols[5][0] != ""
    psi = np.array([float(x) for x in cols[1]])
    r = [float(x) for x in cols[2]]
    phi = [float(x) for x in cols[3]]
    k = [_num(x) for x in cols[4]]
    if thrust:
        states = np.column_stack([r, phi, k])
        eta = np.array([float(x) for x in cols[5]])
        kpar = None
    else:
        states = np.column_stack([r, phi])
        eta = None
        kpar = k[0]
    dimensional = None
    if cols[0][0] != "":
        dimensional = np.column_stack([[float(x) for x in cols[j]] for j in (0, 6, 7, 8)])
    return Trajectory(
        model="thrust" if thrust else "planar",
        psi=psi,
        states=states,
        rhs=np.full(states.shape, np.nan),
        termination=cols[9][-1],
        eta=eta,
        k=kpar,
        dimensional=dimensional,
    )


# Phase portraits

def write_portrait_csv(trajectories, target):
    f, close = _open_out(target)
    try:
        w = _writer(f)
        w.writerow(PORTRAIT_COLUMNS)
        for i, traj in enumerate(trajectories):
            err = traj.error if traj.termination == "failed" else ""
            for psi, s in zip(traj.psi, traj.states):
                w.writerow([i, fmt(psi), fmt(s[0]), fmt(s[1]), err or ""])
    finally:
        if close:
            f.close()


def read_portrait_csv(source):
    """Return a list of (psi, r, phi, error) arrays per trajectory id."""
    f, close = _open_in(source)
    try:
        reader = csv.reader(f)
        header = next(reader)
        if header != PORTRAIT_COLUMNS:
            raise ValueError(f"unexpected portrait header {header}")
        grouped = {}
        for row in reader:
            grouped.setdefault(int(row[0]), []).append(row)
    finally:
        if close:
            f.close()
    out = []
    for i in sorted(grouped):
        rows = grouped[i]
        out.append((
            np.array([float(r[1]) for r in rows]),
            np.array([float(r[2]) for r in rows]),
            np.array([float(r[3]) for r in rows]),
            rows[0][4] or None,
        ))
    return out


# Plot scripts

def portrait_plot_script(csv_name, n_traj, equilibria, title=""):
    lines = [
        "# gnuplot script: phase portrait",
        "set datafile separator ','",
        "set key off",
        "set xlabel 'r'",
        "set ylabel 'phi [rad]'",
        f"set title '{title}'" if title else "unset title",
    ]
    markers = "".join(f"{fmt(s.r)} {fmt(s.phi)}\n" for s in equilibria)
    lines.append(
        f"plot for [i=0:{max(n_traj - 1, 0)}] '{csv_name}' skip 1 using "
        "($1==i ? $3 : 1/0):4 with lines lc rgb '#3060a0', \\"
    )
    lines.append("     '-' using 1:2 with points pt 7 ps 1.5 lc rgb '#c03020'")
    return "\n".join(lines) + "\n" + markers + "e\n"


def branch_plot_script(csv_name, model):
    state_col = 3
    stable = "(strcol({c}) eq 'stable-node' || strcol({c}) eq 'stable-focus')"
    cls_col = len(branch_columns(model)) - 1
    cond = stable.format(c=cls_col)
    xlabel = "k" if model == "planar" else "eta"
    return "\n".join([
        "# gnuplot script: equilibrium branch (solid: stable, dashed: unstable)",
        "set datafile separator ','",
        "set key off",
        f"set xlabel '{xlabel}'",
        "set ylabel 'r'",
        f"plot '{csv_name}' skip 1 using 2:({cond} ? ${state_col} : 1/0) with lines dt 1 lc rgb '#202020', \\",
        f"     '{csv_name}' skip 1 using 2:({cond} ? 1/0 : ${state_col}) with lines dt 2 lc rgb '#202020'",
    ]) + "\n"


# Config files

def parse_config(text):
    """Parse ``key = value`` lines with ``#`` comments and ``[section]`` headers.

    Keys before the first header go to section ``""``. Returns a dict of dicts.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, default_section="\x00defaults",
    )
    parser.optionxform = str
    try:
        parser.read_string("[\x00top]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    out = {}
    for section in parser.sections():
        name = "" if section == "\x00top" else section
        out[name] = dict(parser.items(section))
    return out


def format_config(values):
    buf = io.StringIO()
    for key in sorted(values):
        v = values[key]
        if isinstance(v, float):
            v = fmt(v)
        elif isinstance(v, (list, tuple)):
            v = ",".join(fmt(x) if isinstance(x, float) else str(x) for x in v)
        buf.write(f"{key} = {v}\n")
    return buf.getvalue()
