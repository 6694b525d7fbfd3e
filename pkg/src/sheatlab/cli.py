"""Batch front door: run kernels, simulations, oracles, sweeps and analyses
from declarative config files, writing CSV/JSON bundles plus a run manifest.

    sheatlab SUBCOMMAND --config experiment.cfg [--seed N] [--workers N]
                        [--out DIR] [--override section.key=value ...]

Subcommands: kernel, simulate, oracle, moments, lyapunov, excitation,
thresholds, grr-check, verify-bounds, all. Exit codes: 0 success, 1 config
error, 2 numerical failure, 3 assertion failure in verification subcommands.
Errors print a JSON diagnostic on stderr.

Monte Carlo work is sharded into fixed 64-sample blocks merged in index
order, so every output is bit-identical for any --workers value; the seed
comes from --seed, else the SHEAT_SEED environment variable, else the config.
"""

import argparse
import configparser
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis as ana
from . import kernel as kern
from . import oracle as ora
from . import regularity as reg
from . import stats as st
from .config import ExperimentConfig, RunManifest, load_manifest, sha256_file
from .solver import ConfigError, PathDivergedError, simulate_path, simulate_paths

SHARD_SIZE = 64

SUBCOMMANDS = ("kernel", "simulate", "oracle", "moments", "lyapunov",
               "excitation", "thresholds", "grr-check", "verify-bounds", "all")


class VerificationError(AssertionError):
    """A verification subcommand's assertion failed."""


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return path


def _moment_shard(args):
    sim_cfg, samples, functionals, times = args
    paths = simulate_paths(sim_cfg, samples)
    return st.ensemble_estimates(paths, functionals, times)


def _ensemble_table(sim_cfg, n_samples, functionals, times, workers):
    shards = [list(range(lo, min(lo + SHARD_SIZE, n_samples)))
              for lo in range(0, n_samples, SHARD_SIZE)]
    tasks = [(sim_cfg, shard, functionals, times) for shard in shards]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(_moment_shard, tasks))
    else:
        tables = [_moment_shard(t) for t in tasks]
    return st.merge_tables(tables)


def _functional_label(f):
    if f.kind == st.POINTWISE:
        return f"pointwise:{f.x:g}"
    return f.kind


class Runner:
    def __init__(self, cfg: ExperimentConfig, out_dir, workers):
        self.cfg = cfg
        self.out = out_dir
        self.workers = workers
        os.makedirs(out_dir, exist_ok=True)

    def _manifest(self, command):
        return RunManifest(command=command, config=self.cfg.snapshot(),
                           config_hash=self.cfg.content_hash(),
                           seed=self.cfg.get("ensemble", "master_seed"))

    # ------------------------------------------------------------------ #

    def cmd_kernel(self):
        man = self._manifest("kernel")
        spec = kern.KernelSpec(nu=self.cfg.get("equation", "nu"),
                               tol=self.cfg.get("kernel", "tol"))
        gamma = self.cfg.get("kernel", "gamma")
        cal = kern.calibrate_lower_bound(spec, gamma)
        dx_rep = kern.kernel_dx_bound_check(
            spec, np.geomspace(1e-3, 1.0, 10),
            np.linspace(0.05, 0.95, 11), np.linspace(0.05, 0.95, 11))
        rows = []
        xs = np.linspace(gamma, 1 - gamma, 5)
        for t in np.geomspace(1e-3, 4.0, 10):
            plan = kern.truncation_terms(spec, float(t))
            for x in xs:
                for y in xs:
                    rows.append((
                        float(t), float(x), float(y),
                        float(kern.eval_kernel(spec, float(t), x, y)),
                        float(kern.free_kernel(spec.nu, float(t), x, y)),
                        float(kern.kernel_lower_bound(cal.spec, spec, float(t), x, y)),
                        plan.n_images if plan.use_images else plan.n_terms,
                    ))
        table = _write_csv(os.path.join(self.out, "kernel_table.csv"),
                           ["t", "x", "y", "g_D", "g_free", "lower_bound",
                            "n_terms"], rows)
        man.add_output(table)
        sg = kern.semigroup_check(spec, 0.05, 0.05, 0.5, 0.5,
                                  n_quad=self.cfg.get("kernel", "quad_points"))
        man.constants = {
            "kappa1_hat": cal.spec.kappa1,
            "kappa2_hat": cal.spec.kappa2,
            "k1_hat": dx_rep.k1,
            "k2_hat": dx_rep.k2,
            "k3": kern.k3_constant(spec),
            "gamma": gamma,
        }
        man.diagnostics = {
            "semigroup_residual": sg.residual_convolution,
            "squared_kernel_residual": sg.residual_square,
            "series_image_switch_time": kern.switch_time(spec),
        }
        cal_path = _write_json(os.path.join(self.out, "kernel_calibration.json"),
                               man.constants)
        man.add_output(cal_path)
        man.write(self.out)

    def cmd_simulate(self):
        man = self._manifest("simulate")
        sim = self.cfg.simulation()
        path = simulate_path(sim, 0)
        rows = []
        for t in path.times:
            logabs = path.log_abs_at(t)
            field = path.values[path._index(t)]
            scale = path.log_scale[path._index(t)]
            for x, v, lv in zip(sim.grid.x, field, logabs):
                rows.append((float(t), float(x),
                             float(v * math.exp(scale)) if scale < 700 else math.inf,
                             float(lv)))
        out = _write_csv(os.path.join(self.out, "path.csv"),
                         ["t", "x", "u", "log_abs_u"], rows)
        man.add_output(out)
        man.diagnostics["cfl_ratio"] = sim.grid.cfl_ratio(sim.nu)
        man.write(self.out)

    def cmd_oracle(self):
        man = self._manifest("oracle")
        ocfg = self.cfg.oracle()
        mf = ora.second_moment_volterra(ocfg)
        rows = []
        for i, t in enumerate(mf.t):
            for j, x in enumerate(mf.x):
                lm = mf.log_m[i, j]
                rows.append((float(t), float(x),
                             float(math.exp(lm)) if lm < 700 else math.inf,
                             float(lm), float(mf.error_log[i, j])))
        out = _write_csv(os.path.join(self.out, "oracle_moments.csv"),
                         ["t", "x", "m", "log_m", "err_log"], rows)
        man.add_output(out)
        env = ora.lower_bound_envelope(mf, self.cfg.get("oracle", "gamma"))
        rows = [(float(t), float(math.exp(lh)) if lh < 700 else math.inf,
                 float(math.exp(lH)) if lH < 700 else math.inf,
                 float(lh), float(lH))
                for t, lh, lH in zip(env.t, env.log_h, env.log_big_h)]
        out2 = _write_csv(os.path.join(self.out, "oracle_envelope.csv"),
                          ["t", "h", "H", "log_h", "log_H"], rows)
        man.add_output(out2)
        man.diagnostics["compensation_rate"] = env.compensation_rate
        man.write(self.out)

    def _moment_cells(self, man):
        functionals = self.cfg.functionals()
        times = self.cfg.get("observation", "times")
        n_samples = self.cfg.get("ensemble", "n_samples")
        cells = {}
        cell_meta = {}
        for lam in self.cfg.lambda_grid():
            tag = f"{lam:g}".replace(".", "p").replace("-", "m")
            cell_csv = os.path.join(self.out, f"moments_cell_{tag}.csv")
            prev = load_manifest(self.out, "moments")
            recorded = (prev or {}).get("diagnostics", {}).get("cells", {})
            if (os.path.exists(cell_csv)
                    and recorded.get(tag, {}).get("sha256") == sha256_file(cell_csv)
                    and recorded.get(tag, {}).get("config_hash")
                    == self.cfg.content_hash()):
                cell_meta[tag] = recorded[tag]  # resumption: checksum matches
                cells[lam] = None
                continue
            try:
                sim = self.cfg.simulation(lam=lam)
                table = _ensemble_table(sim, n_samples, functionals, times,
                                        self.workers)
            except PathDivergedError as exc:
                man.failed_cells.append({"lambda": lam, "error": str(exc)})
                continue
            rows = []
            for (f, t), est in sorted(table.items(),
                                      key=lambda kv: (kv[0][1], _functional_label(kv[0][0]),
                                                      kv[0][0].p)):
                rows.append((lam, f.p, _functional_label(f), t, est.n,
                             est.mean if not est.overflowed else math.inf,
                             est.ci_half_width if (est.n >= 2 and not est.overflowed)
                             else math.nan,
                             est.log_mean, est.log_ci_half_width,
                             int(est.overflowed)))
            _write_csv(cell_csv, ["lambda", "p", "functional", "t", "n", "mean",
                                  "ci_half_width", "log_mean", "log_ci_half_width",
                                  "log_mode"], rows)
            cell_meta[tag] = {"sha256": sha256_file(cell_csv),
                              "config_hash": self.cfg.content_hash(),
                              "lambda": lam}
            cells[lam] = table
        man.diagnostics["cells"] = cell_meta
        return cells, cell_meta

    def cmd_moments(self):
        man = self._manifest("moments")
        cells, cell_meta = self._moment_cells(man)
        combined = os.path.join(self.out, "moments.csv")
        with open(combined, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "p", "functional", "t", "n", "mean",
                             "ci_half_width", "log_mean", "log_ci_half_width",
                             "log_mode"])
            for lam in self.cfg.lambda_grid():
                tag = f"{lam:g}".replace(".", "p").replace("-", "m")
                cell_csv = os.path.join(self.out, f"moments_cell_{tag}.csv")
                if os.path.exists(cell_csv):
                    with open(cell_csv, encoding="utf-8") as cf:
                        next(cf)
                        fh.write(cf.read())
        man.add_output(combined)
        man.write(self.out)

    def cmd_lyapunov(self):
        man = self._manifest("lyapunov")
        functionals = self.cfg.functionals()
        times = self.cfg.get("observation", "times")
        n_samples = self.cfg.get("ensemble", "n_samples")
        frac = self.cfg.get("analysis", "fit_window")
        reports = []
        plot_rows = []
        for lam in self.cfg.lambda_grid():
            sim = self.cfg.simulation(lam=lam)
            table = _ensemble_table(sim, n_samples, functionals, times, self.workers)
            horizon = max(times)
            window = (frac[0] * horizon, frac[1] * horizon)
            for f in functionals:
                ests = [table[(f, t)] for t in times]
                try:
                    fit = ana.lyapunov_exponent(ests, window=window)
                except ana.AnalysisError as exc:
                    man.failed_cells.append({"lambda": lam,
                                             "functional": _functional_label(f),
                                             "error": str(exc)})
                    continue
                reports.append({
                    "lambda": lam, "p": f.p, "functional": _functional_label(f),
                    "slope": fit.slope, "slope_ci": fit.slope_ci,
                    "intercept": fit.intercept, "r_squared": fit.r_squared,
                    "window": fit.window, "n_dropped": fit.n_dropped,
                    "significantly_negative": fit.significantly_negative,
                    "significantly_positive": fit.significantly_positive,
                })
                for t in times:
                    est = table[(f, t)]
                    plot_rows.append((lam, f.p, _functional_label(f), t,
                                      est.log_mean, est.log_ci_half_width))
        out = _write_json(os.path.join(self.out, "lyapunov.json"),
                          {"fits": reports})
        man.add_output(out)
        out2 = _write_csv(os.path.join(self.out, "lyapunov_series.csv"),
                          ["lambda", "p", "functional", "t", "log_moment",
                           "log_ci_half_width"], plot_rows)
        man.add_output(out2)
        man.write(self.out)

    def cmd_excitation(self):
        man = self._manifest("excitation")
        lams = self.cfg.get("analysis", "lambda_grid")
        t_star = self.cfg.get("analysis", "excitation_time")
        points = []
        for lam in lams:
            ocfg = self.cfg.oracle(lam=lam, horizon=t_star,
                                   n_time_panels=self.cfg.get("oracle",
                                                              "n_time_panels"))
            points.append(ora.energy_at(ocfg, t_star))
        fit = ana.excitation_index(lams, [p.log_energy for p in points], p=2.0)
        payload = {
            "t": t_star,
            "p": 2,
            "backend": "oracle",
            "e2_hat": fit.e_p_hat,
            "slope_ci": fit.index.slope_ci,
            "r2_quartic": fit.r2_quartic,
            "r2_quadratic": fit.r2_quadratic,
            "points": [{"lambda": p.lam, "log_energy": p.log_energy,
                        "rate": p.rate, "window_horizon": p.window_horizon,
                        "extrapolated": p.extrapolated,
                        "norm_lam4": p.log_energy / p.lam ** 4,
                        "norm_lam4_kl": p.log_energy / p.lam ** 4
                        * self.cfg.sigma().lower_constant}
                       for p in points],
        }
        mc_samples = self.cfg.get("analysis", "mc_samples")
        if mc_samples > 0:
            payload["mc"] = self._excitation_mc(lams, t_star, mc_samples, man)
        out = _write_json(os.path.join(self.out, "excitation.json"), payload)
        man.add_output(out)
        rows = [(p.lam, p.log_energy, p.rate, int(p.extrapolated)) for p in points]
        out2 = _write_csv(os.path.join(self.out, "excitation_series.csv"),
                          ["lambda", "log_E2", "rate", "extrapolated"], rows)
        man.add_output(out2)
        man.write(self.out)

    def _excitation_mc(self, lams, t_star, n_samples, man):
        p_mc = self.cfg.get("analysis", "mc_p")
        f = st.Functional.lp(p_mc)
        log_es, log_cis = [], []
        for lam in lams:
            base = self.cfg.simulation(lam=lam)
            sim = type(base)(grid=type(base.grid)(
                n_interior=base.grid.n_interior, dt=base.grid.dt, horizon=t_star),
                lam=float(lam), sigma=base.sigma, u0=base.u0, nu=base.nu,
                boundary=base.boundary, scheme=base.scheme,
                master_seed=base.master_seed, observation_times=(t_star,))
            table = _ensemble_table(sim, n_samples, [f], (t_star,), self.workers)
            est = table[(f, t_star)]
            energy = st.p_energy(est)
            log_es.append(energy.log_value)
            log_cis.append(energy.log_ci_half_width)
        fit = ana.excitation_index(lams, log_es, log_cis=log_cis, p=p_mc)
        return {"p": p_mc, "n_samples": n_samples,
                "e_p_hat": fit.e_p_hat, "slope_ci": fit.index.slope_ci,
                "log_energies": log_es, "log_cis": log_cis,
                "dropped_lambdas": fit.dropped_lambdas}

    def cmd_thresholds(self):
        man = self._manifest("thresholds")
        lams = self.cfg.get("analysis", "lambda_grid")
        frac = self.cfg.get("analysis", "fit_window")
        scan = ana.oracle_threshold_scan(
            lams, u0=self.cfg.initial_data(),
            horizon=self.cfg.get("grid", "horizon"),
            gamma=self.cfg.get("oracle", "gamma"),
            nu=self.cfg.get("equation", "nu"),
            k_sigma=self.cfg.sigma().lower_constant,
            boundary=self.cfg.get("equation", "boundary"),
            n_time_panels=self.cfg.get("oracle", "n_time_panels"),
            n_x=self.cfg.get("oracle", "n_x"),
            window_fraction=tuple(frac))
        payload = {
            "lambda_l_hat": scan.lambda_l_hat,
            "lambda_u_hat": scan.lambda_u_hat,
            "fits": [{"lambda": lam, "slope": f.slope, "slope_ci": f.slope_ci,
                      "significantly_negative": f.significantly_negative,
                      "significantly_positive": f.significantly_positive}
                     for lam, f in zip(scan.lams, scan.fits)],
        }
        out = _write_json(os.path.join(self.out, "thresholds.json"), payload)
        man.add_output(out)
        rows = [(lam, f.slope, f.slope_ci) for lam, f in zip(scan.lams, scan.fits)]
        out2 = _write_csv(os.path.join(self.out, "thresholds_series.csv"),
                          ["lambda", "slope", "slope_ci"], rows)
        man.add_output(out2)
        man.write(self.out)

    def cmd_grr_check(self):
        man = self._manifest("grr-check")
        params = reg.GrrParams(p=self.cfg.get("grr", "p"),
                               delta=self.cfg.get("grr", "delta"),
                               eps=self.cfg.get("grr", "eps"))
        n_paths = self.cfg.get("grr", "n_paths")
        sim = self.cfg.simulation()
        if sim.grid.n_interior + 2 < 64:
            raise ConfigError("grr-check needs n_interior >= 62 sample nodes")
        t_last = max(sim.observation_times)
        rows = []
        violations = 0
        for path in simulate_paths(sim, range(n_paths)):
            prof = np.concatenate([[0.0], path.field_at(t_last), [0.0]]) \
                if sim.boundary == "dirichlet" else path.field_at(t_last)
            g = reg.grr_functional(prof, params)
            rep = reg.holder_bound_check(prof, params)
            violations += rep.n_violations
            rows.append((path.sample_index, g.value, rep.max_ratio, g.cutoff,
                         g.sensitivity, rep.n_violations, int(g.divergent)))
        out = _write_csv(os.path.join(self.out, "grr_paths.csv"),
                         ["sample", "B", "max_ratio", "cutoff",
                          "cutoff_sensitivity", "violations", "divergent"], rows)
        man.add_output(out)
        # closed-form verifications
        lin_params = reg.GrrParams(p=2, delta=1, eps=0.5)
        b_lin = reg.grr_functional(np.linspace(0, 1, 1025), lin_params).value
        pinv, phi = reg.power_law_pair(params)
        general = reg.grr_general(pinv, phi, 2.0, 0.5)
        closed = reg.closed_form_bound(params, 2.0, 0.5)
        payload = {
            "linear_b": b_lin,
            "linear_b_target": 8.0 / 3.0,
            "linear_b_error": abs(b_lin - 8.0 / 3.0),
            "general_vs_closed_rel": abs(general - closed) / closed,
            "kappa": params.kappa,
            "ensemble_violations": violations,
        }
        out2 = _write_json(os.path.join(self.out, "grr_check.json"), payload)
        man.add_output(out2)
        man.write(self.out)
        if abs(b_lin - 8.0 / 3.0) > 1e-4:
            raise VerificationError("linear-profile B misses the closed form 8/3")
        if payload["general_vs_closed_rel"] > 1e-8:
            raise VerificationError("general GRR integral misses the power-law form")
        if violations > 0:
            raise VerificationError(f"{violations} Holder-bound violations")

    def cmd_verify_bounds(self):
        man = self._manifest("verify-bounds")
        spec = kern.KernelSpec(nu=self.cfg.get("equation", "nu"),
                               tol=self.cfg.get("kernel", "tol"))
        alpha = self.cfg.get("bounds", "alpha")
        neg = ana.verify_negative_beta(spec, alpha, self.cfg.get("bounds", "betas"))
        thr = ana.verify_threshold_beta(spec, alpha, self.cfg.get("bounds", "margins"))
        payload = {
            "negative_beta": {
                "betas": neg.betas, "sups": neg.sups, "c_hats": neg.c_hats,
                "fitted_exponent": neg.fitted_exponent,
                "expected_exponent": neg.expected_exponent,
                "refinement_change": neg.refinement_change,
                "domination_checked": neg.domination_checked,
            },
            "threshold": {
                "betas": thr.betas, "sups": thr.sups, "c_hats": thr.c_hats,
                "fitted_exponent": thr.fitted_exponent,
                "expected_exponent": thr.expected_exponent,
                "threshold": thr.threshold,
                "domination_checked": thr.domination_checked,
            },
        }
        out = _write_json(os.path.join(self.out, "verify_bounds.json"), payload)
        man.add_output(out)
        man.write(self.out)
        if abs(neg.fitted_exponent - neg.expected_exponent) \
                > 0.1 * abs(neg.expected_exponent):
            raise VerificationError("negative-beta exponent outside the 10% band")
        if abs(thr.fitted_exponent + 1.0) > 0.1:
            raise VerificationError("threshold blow-up exponent outside the 10% band")
        if neg.refinement_change > 0.02:
            raise VerificationError("bound constant did not stabilize under refinement")

    def cmd_all(self):
        for name in ("kernel", "simulate", "oracle", "moments", "lyapunov",
                     "excitation", "thresholds", "grr-check", "verify-bounds"):
            self.dispatch(name)

    def dispatch(self, name):
        getattr(self, "cmd_" + name.replace("-", "_"))()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sheatlab",
        description="stochastic heat equation simulation and verification lab")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=None,
                        help="experiment config file (INI); defaults apply if omitted")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides SHEAT_SEED and the config)")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes; never affects results")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="config override, repeatable")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    seed = args.seed
    if seed is None and os.environ.get("SHEAT_SEED"):
        seed = int(os.environ["SHEAT_SEED"])
    try:
        if args.config:
            cfg = ExperimentConfig.from_file(args.config, overrides=args.override,
                                             seed=seed)
        else:
            cfg = ExperimentConfig.defaults()
            for item in args.override:
                cfg._apply_override(item)
            if seed is not None:
                cfg.raw["ensemble"]["master_seed"] = str(seed)
            cfg.validate()
        out_dir = args.out or cfg.get("output", "directory")
        Runner(cfg, out_dir, max(args.workers, 1)).dispatch(args.subcommand)
        return 0
    except (ConfigError, configparser.Error, KeyError) as exc:
        _diag("config_error", exc)
        return 1
    except VerificationError as exc:
        _diag("verification_failure", exc)
        return 3
    except Exception as exc:  # numerical failures: NaN aborts, divergence
        _diag("numerical_failure", exc)
        return 2


def _diag(kind, exc):
    print(json.dumps({"error": kind, "type": type(exc).__name__,
                      "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
