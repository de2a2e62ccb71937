"""Experiment orchestration: the map/Monte-Carlo sweeps behind each CLI verb.

Every experiment consumes a resolved config dict, writes CSV data plus a
JSON manifest into the output directory, and returns the list of files it
wrote.  Variances are reported as 10 log10(rad^2); masked grid cells carry
an explicit boolean column.  Grid sweeps are pure functions of the cell, so
optional process parallelism (``threads``) cannot change results; assembly
is by cell index, independent of completion order.
"""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bounds import (
    MultiTargetFimBuilder,
    TargetState,
    crb_alpha_closed,
    crb_ris,
    crb_xi_closed,
    crbs_from_fim,
    efim,
    fim_db_single,
    fim_sb_single,
    peb_from_efim,
    peb_multi_from_fims,
)
from .channel import path_gains
from .classification import confusion_matrix, rayleigh_scale
from .config import SystemModel, build_model, config_hash, fixed_scene, grid_points
from .detection import Combiner, despread_regressor_at_angle, pd_marginal, threshold_from_pfa
from .errors import SensingError
from .geometry import ScatterPoint, TargetKind, angles_from_position, triangle_distances
from .io import write_csv, write_manifest


def _db10(x: float) -> float:
    return 10.0 * math.log10(x)


def _target_state(q, model: SystemModel) -> TargetState:
    """Angles and unit-RCS, unit-fading bounce gains at position q."""
    point = ScatterPoint(position=np.asarray(q, dtype=float), rcs_sqrt=1.0,
                         kind=TargetKind.OBJECT_LIKE)
    ang = angles_from_position(point.position, model.geom)
    g = path_gains(point, model.geom, fading=1.0, wavelength=model.wavelength,
                   iota=model.iota)
    return TargetState(alpha=ang.alpha, xi=ang.xi, sb_gain=g.sb_gain, db_gain=g.db_gain)


def _builders(model: SystemModel, fixed_states):
    sb = MultiTargetFimBuilder(fixed_states, "sb", model.ula, model.pilots, model.noise_power)
    db = MultiTargetFimBuilder(fixed_states, "db", model.ula, model.pilots, model.noise_power,
                               model.panel, model.code, model.harmonics, model.mode)
    return sb, db


def _crb_cell(q, model: SystemModel, builders):
    """CRBs for one moving-target cell; None marks a masked value."""
    try:
        mov = _target_state(q, model)
    except SensingError:
        return None, None
    sb_builder, db_builder = builders
    if sb_builder is None:
        try:
            ca = crb_alpha_closed(mov.alpha, mov.sb_gain, model.ula, model.pilots,
                                  model.noise_power)
        except SensingError:
            ca = None
        try:
            cx = crb_xi_closed(mov.xi, mov.alpha, mov.db_gain, model.ula, model.panel,
                               model.code, model.harmonics, model.pilots,
                               model.noise_power, model.mode)
        except SensingError:
            cx = None
        return ca, cx
    out = []
    for builder in (sb_builder, db_builder):
        try:
            val = float(crbs_from_fim(builder.fim(mov))[0])
            out.append(val if val > 0 else None)
        except SensingError:
            out.append(None)
    return tuple(out)


def _peb_cell(q, model: SystemModel, builders, fixed_pos):
    try:
        mov = _target_state(q, model)
        sb_builder, db_builder = builders
        if sb_builder is None:
            f_sb = fim_sb_single(mov.alpha, mov.sb_gain, model.ula, model.pilots,
                                 model.noise_power)
            f_db = fim_db_single(mov.xi, mov.alpha, mov.db_gain, model.ula, model.panel,
                                 model.code, model.harmonics, model.pilots,
                                 model.noise_power, model.mode)
            return peb_from_efim(q, model.geom, efim(f_sb), efim(f_db))
        positions = [q] + list(fixed_pos)
        return peb_multi_from_fims(sb_builder.fim(mov), db_builder.fim(mov),
                                   positions, model.geom, which=0)
    except SensingError:
        return None


def _ris_cell(q, model: SystemModel):
    try:
        mov = _target_state(q, model)
    except SensingError:
        return None, None
    _, crb = crb_ris(mov.xi, mov.alpha, mov.db_gain, model.ris_profile,
                     model.panel, model.ula, model.pilots, model.noise_power)
    try:
        cx = crb_xi_closed(mov.xi, mov.alpha, mov.db_gain, model.ula, model.panel,
                           model.code, model.harmonics, model.pilots,
                           model.noise_power, model.mode)
    except SensingError:
        cx = None
    return (None if not np.isfinite(crb) else crb), cx


def _map_cells(cells, worker, threads: int):
    if threads <= 1:
        return [worker(c) for c in cells]
    chunk = max(1, len(cells) // (threads * 4))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, cells, chunksize=chunk))


def _cells(model: SystemModel, res: float):
    xs, zs = grid_points(model.geom, res)
    return [np.array([x, 0.0, z]) for z in zs for x in xs]


def run_crb_map(cfg: dict, out_dir: str) -> list[str]:
    """Angle-CRB maps over the scene for the configured target count."""
    model = build_model(cfg)
    fixed = fixed_scene(cfg, model)
    builders = (None, None)
    if fixed:
        builders = _builders(model, [_target_state(p.position, model) for p in fixed])
    cells = _cells(model, float(cfg["grid_res_m"]))
    worker = functools.partial(_crb_cell, model=model, builders=builders)
    values = _map_cells(cells, worker, int(cfg["threads"]))
    rows_a, rows_x = [], []
    for q, (ca, cx) in zip(cells, values):
        rows_a.append((float(q[0]), float(q[2]),
                       None if ca is None else _db10(ca), ca is None))
        rows_x.append((float(q[0]), float(q[2]),
                       None if cx is None else _db10(cx), cx is None))
    files = []
    for name, rows in (("crb_alpha", rows_a), ("crb_xi", rows_x)):
        path = os.path.join(out_dir, f"{name}_map.csv")
        write_csv(path, ("x_m", "z_m", "crb_db", "masked"), rows)
        files.append(path)
    files.append(write_manifest(out_dir, "crb_map", config_hash(cfg), __version__, files))
    return files


def run_peb_map(cfg: dict, out_dir: str) -> list[str]:
    """Position-error-bound map (meters) for the moving target."""
    model = build_model(cfg)
    fixed = fixed_scene(cfg, model)
    builders = (None, None)
    fixed_pos = []
    if fixed:
        fixed_pos = [p.position for p in fixed]
        builders = _builders(model, [_target_state(p, model) for p in fixed_pos])
    cells = _cells(model, float(cfg["grid_res_m"]))
    worker = functools.partial(_peb_cell, model=model, builders=builders,
                               fixed_pos=fixed_pos)
    values = _map_cells(cells, worker, int(cfg["threads"]))
    rows = [
        (float(q[0]), float(q[2]), v, v is None)
        for q, v in zip(cells, values)
    ]
    path = os.path.join(out_dir, "peb_map.csv")
    write_csv(path, ("x_m", "z_m", "peb_m", "masked"), rows)
    manifest = write_manifest(out_dir, "peb_map", config_hash(cfg), __version__, [path])
    return [path, manifest]


def run_detection_map(cfg: dict, out_dir: str) -> list[str]:
    """Marginal detection probability maps: 2 target types x 2 combiners."""
    model = build_model(cfg)
    xs, zs = grid_points(model.geom, float(cfg["grid_res_m"]))
    gamma_th = threshold_from_pfa(model.p_fa)
    sig = {"human_like": model.hypotheses.rcs_sqrts[1],
           "object_like": model.hypotheses.rcs_sqrts[2]}
    files = []
    for comb in (Combiner.ALL_ONES, Combiner.MATCHED_DESPREAD):
        # effective regressor energy depends on the cell only through alpha
        h_cache: dict = {}
        rows = {label: [] for label in sig}
        for z in zs:
            for x in xs:
                q = np.array([x, 0.0, z])
                try:
                    ang = angles_from_position(q, model.geom)
                except SensingError:
                    for label in sig:
                        rows[label].append((float(x), float(z), None, label, comb.value, True))
                    continue
                key = round(ang.alpha, 12)
                if key not in h_cache:
                    h_cache[key] = despread_regressor_at_angle(
                        ang.alpha, model.ula, model.pilots, comb
                    ).effective_norm_sq
                h_eff = h_cache[key]
                d_r, _, _ = triangle_distances(q, model.geom)
                for label, s in sig.items():
                    scale = rayleigh_scale(s, 2.0 * d_r, model.sigma_nu,
                                           wavelength=model.wavelength, iota=model.iota)
                    pd = pd_marginal(scale, h_eff, model.noise_power, gamma_th)
                    rows[label].append((float(x), float(z), pd, label, comb.value, False))
        for label in sig:
            path = os.path.join(out_dir, f"detect_map_{label}_{comb.value}.csv")
            write_csv(path, ("x_m", "z_m", "p_d", "sp_type", "combiner", "masked"), rows[label])
            files.append(path)
    files.append(write_manifest(out_dir, "detect_map", config_hash(cfg), __version__, files))
    return files


def classification_operating_point(model: SystemModel, snr_db: float, true_index: int):
    """(gain_scale, estimator_var) realizing the requested mean SNR.

    The matched-despread regressor energy is angle-independent for the
    orthogonal pilot block, so the mean SNR 2 tau^2 h2 / sigma_n^2 of the
    true class fixes the shared propagation factor G(d) sigma_nu at the cell.
    """
    reg = despread_regressor_at_angle(0.0, model.ula, model.pilots,
                                      Combiner.MATCHED_DESPREAD)
    h2 = reg.effective_norm_sq
    est_var = model.noise_power / h2
    sig = model.hypotheses.rcs_sqrts[true_index]
    snr = 10.0 ** (snr_db / 10.0)
    gain_scale = math.sqrt(snr * est_var) / sig
    return gain_scale, est_var


def run_classification_mc(cfg: dict, out_dir: str) -> list[str]:
    """Confusion rows versus mean SNR for both true target types."""
    model = build_model(cfg)
    n_trials = int(cfg["n_trials"])
    seed = int(cfg["seed"])
    rows = []
    for snr_db in cfg["classification_snr_db"]:
        for true_index, label in ((1, "human_like"), (2, "object_like")):
            gain_scale, est_var = classification_operating_point(model, snr_db, true_index)
            conf = confusion_matrix(gain_scale, model.hypotheses, est_var,
                                    n_trials=n_trials,
                                    seed=seed + 1000 * true_index, method="mc")
            p = conf[true_index]
            rows.append((float(snr_db), label, float(p[0]), float(p[1]), float(p[2]),
                         n_trials, seed))
    path = os.path.join(out_dir, "classification_mc.csv")
    write_csv(path, ("snr_db", "true_class", "p_h0", "p_h1", "p_h2", "n_trials", "seed"), rows)
    manifest = write_manifest(out_dir, "classification_mc", config_hash(cfg), __version__, [path])
    return [path, manifest]


def run_ris_compare(cfg: dict, out_dir: str) -> list[str]:
    """Fixed-profile linear-panel baseline CRB(xi) next to the switching panel."""
    model = build_model(cfg)
    cells = _cells(model, float(cfg["grid_res_m"]))
    worker = functools.partial(_ris_cell, model=model)
    values = _map_cells(cells, worker, int(cfg["threads"]))
    rows = []
    for q, (ris, stcm) in zip(cells, values):
        rows.append(
            (float(q[0]), float(q[2]),
             None if ris is None else _db10(ris), ris is None,
             None if stcm is None else _db10(stcm), stcm is None)
        )
    path = os.path.join(out_dir, "ris_compare.csv")
    write_csv(path, ("x_m", "z_m", "ris_crb_xi_db", "ris_masked",
                     "stcm_crb_xi_db", "stcm_masked"), rows)
    manifest = write_manifest(out_dir, "ris_compare", config_hash(cfg), __version__, [path])
    return [path, manifest]
