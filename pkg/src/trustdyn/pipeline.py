"""Pipeline stages. Each stage reads the previous stages' files from the
output directory, so stages can be run one at a time or chained by ``all``.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analysis, classifier, clustering, csvio, estimation, scenario_sim, tables
from .config import PipelineConfig
from .trust_core import TrustParams, predicted_means

log = logging.getLogger(__name__)

STAGES = ("simulate", "fit", "cluster", "classify", "analyze", "report")
MANIFEST = "manifest.json"


class StageError(RuntimeError):
    """A stage failed; ``exit_code`` says whether the cause was data or numerics."""

    def __init__(self, stage: str, cause: BaseException, exit_code: int):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code


@contextlib.contextmanager
def _mapper(jobs: int):
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield lambda fn, items: pool.map(fn, items, chunksize=4)


class _Staging:
    """Collects a stage's files in a scratch directory and publishes them only on success."""

    def __init__(self, out: Path, stage: str):
        self.out = out
        self.tmp = out / f".{stage}.partial"

    def __enter__(self):
        shutil.rmtree(self.tmp, ignore_errors=True)
        self.tmp.mkdir(parents=True)
        return self

    def path(self, name: str) -> Path:
        p = self.tmp / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for src in sorted(self.tmp.rglob("*")):
                if src.is_file():
                    dest = self.out / src.relative_to(self.tmp)
                    dest.parent.mkdir(parents=True, exist_ok=True)
                    src.replace(dest)
        shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def _need(out: Path, name: str) -> Path:
    p = out / name
    if not p.exists():
        raise FileNotFoundError(f"{p} not found; run the stage that produces it first")
    return p


def _level_of(outcomes) -> int:
    return int(round(100.0 * float(np.mean(outcomes))))


# -- simulate ---------------------------------------------------------------

def stage_simulate(cfg: PipelineConfig, out: Path, map_fn=map) -> list[str]:
    records = scenario_sim.generate_cohort(
        cfg.cohort_sizes, cfg.reliability_mix, cfg.seed, cfg.noise_sd, cfg.behavior, map_fn
    )
    with _Staging(out, "simulate") as st:
        csvio.write_table(st.path("trajectories.csv"), csvio.TRAJECTORY_COLUMNS, csvio.trajectory_rows(records))
        csvio.write_table(
            st.path("profiles.csv"),
            csvio.PROFILE_COLUMNS,
            [(r.agent_id, *(r.profile[d] for d in tables.DIMENSIONS)) for r in records],
        )
        csvio.write_table(
            st.path("schedule.csv"),
            csvio.SCHEDULE_COLUMNS,
            [(r.agent_id, r.level, t.index, t.outcome_class) for r in records for t in r.schedule.trials],
        )
        csvio.write_table(
            st.path("agents.csv"),
            csvio.AGENT_COLUMNS,
            [(r.agent_id, r.archetype, r.level, *r.generating_params.as_tuple()) for r in records],
        )
    return ["trajectories.csv", "profiles.csv", "schedule.csv", "agents.csv"]


# -- fit --------------------------------------------------------------------

def _replay(args):
    trajectory, prior = args
    return estimation.map_replay(trajectory, prior)


def stage_fit(cfg: PipelineConfig, out: Path, map_fn=map) -> list[str]:
    trajectories = csvio.ingest_trajectories(_need(out, "trajectories.csv"))
    if len(trajectories) < 3:
        raise ValueError("fitting a leave-one-out prior needs at least 3 agents")
    mle = list(map_fn(estimation.fit_mle, trajectories))
    priors = estimation.leave_one_out_priors([f.params for f in mle])
    replays = list(map_fn(_replay, list(zip(trajectories, priors))))

    param_rows, pred_rows = [], []
    for traj, m, (preds, final) in zip(trajectories, mle, replays):
        for name, fit in (("mle", m), ("map", final)):
            param_rows.append((traj.agent_id, name, *fit.params.as_tuple(), fit.objective_value, fit.converged, fit.degenerate))
        for i, (t, p) in enumerate(zip(traj.reports, preds), start=1):
            pred_rows.append((traj.agent_id, i, float(t), float(p)))
    with _Staging(out, "fit") as st:
        csvio.write_table(st.path("params.csv"), csvio.PARAM_COLUMNS, param_rows)
        csvio.write_table(st.path("predictions.csv"), csvio.PREDICTION_COLUMNS, pred_rows)
    return ["params.csv", "predictions.csv"]


# -- cluster ----------------------------------------------------------------

def load_predictions(out: Path) -> dict[str, np.ndarray]:
    rows = csvio.read_table(_need(out, "predictions.csv"), csvio.PREDICTION_COLUMNS)
    by_agent: dict[str, list] = {}
    for r in rows:
        by_agent.setdefault(r["agent_id"], []).append((int(r["trial"]), float(r["predicted_trust"])))
    return {a: np.array([p for _, p in sorted(v)]) for a, v in by_agent.items()}


def stage_cluster(cfg: PipelineConfig, out: Path, map_fn=map) -> list[str]:
    trajectories = csvio.ingest_trajectories(_need(out, "trajectories.csv"))
    predictions = load_predictions(out)
    missing = [t.agent_id for t in trajectories if t.agent_id not in predictions]
    if missing:
        raise ValueError(f"no predictions for agents {missing[:5]}")
    features = [clustering.compute_features(t, predictions[t.agent_id]) for t in trajectories]
    ids = [t.agent_id for t in trajectories]
    levels = [_level_of(t.outcomes) for t in trajectories]
    assignments, curve, k = clustering.cluster_cohort(
        ids, features, levels, cfg.seed, cfg.clustering_mode, cfg.k_max
    )
    if k != 3:
        log.warning("elbow selected k=%d; archetype labels still use three clusters", k)
    with _Staging(out, "cluster") as st:
        csvio.write_table(
            st.path("clusters.csv"),
            csvio.CLUSTER_COLUMNS,
            [(a.agent_id, a.label, a.features.avg_log_trust, a.features.rmse, a.centroid_distance) for a in assignments],
        )
        csvio.write_table(
            st.path("scree.csv"),
            ("k", "wcss", "selected"),
            [(i + 1, float(w), i + 1 == k) for i, w in enumerate(curve)],
        )
    return ["clusters.csv", "scree.csv"]


# -- classify ---------------------------------------------------------------

def load_profiles(out: Path) -> dict[str, dict[str, float]]:
    rows = csvio.read_table(_need(out, "profiles.csv"), csvio.PROFILE_COLUMNS)
    return {r["agent_id"]: {d: float(r[d]) for d in tables.DIMENSIONS} for r in rows}


def load_labels(out: Path) -> dict[str, str]:
    rows = csvio.read_table(_need(out, "clusters.csv"), csvio.CLUSTER_COLUMNS)
    return {r["agent_id"]: r["label"] for r in rows}


def stage_classify(cfg: PipelineConfig, out: Path, map_fn=map) -> list[str]:
    profiles = load_profiles(out)
    labels = load_labels(out)
    ids = [a for a in profiles if a in labels]
    x = np.array([[profiles[a][d] for d in tables.PREDICTIVE_DIMENSIONS] for a in ids])
    y = [labels[a] for a in ids]
    run = classifier.run_classifier(x, y, cfg.seed, cfg.grid, cfg.test_fraction, cfg.stratify)
    rows = [
        ("best_max_depth", run.hyperparameters[0]),
        ("best_min_samples_leaf", run.hyperparameters[1]),
        ("n_train", len(run.train_index)),
        ("n_test", len(run.test_index)),
        ("accuracy", run.report.accuracy),
        ("weighted_f1", run.report.weighted_f1),
    ]
    rows += [(f"recall_{c}", r) for c, r in zip(classifier.CLASSES, run.report.per_class_recall)]
    for i, t in enumerate(classifier.CLASSES):
        for j, p in enumerate(classifier.CLASSES):
            rows.append((f"confusion_{t}_{p}", int(run.report.confusion_matrix[i, j])))
    rows += [(f"cv_f1_depth{d}_minleaf{m}", s) for (d, m), s in run.cv_scores.items()]
    with _Staging(out, "classify") as st:
        st.path("tree.txt").write_text(classifier.dump_tree(run.tree), encoding="utf-8")
        csvio.write_table(st.path("eval.csv"), ("metric", "value"), rows)
    return ["tree.txt", "eval.csv"]


# -- analyze ----------------------------------------------------------------

def behavior_metrics(out: Path) -> tuple[dict[str, dict[str, float]], dict[str, int]]:
    rows = csvio.read_table(_need(out, "trajectories.csv"), csvio.TRAJECTORY_COLUMNS)
    acc: dict[str, dict] = {}
    for r in rows:
        a = acc.setdefault(r["agent_id"], {"n": 0, "blind": 0, "tracking": 0.0, "detection": 0.0, "success": 0})
        a["n"] += 1
        a["blind"] += r["behavior"] == "BlindFollow"
        a["tracking"] += float(r["tracking_score"])
        a["detection"] += float(r["detection_score"])
        a["success"] += r["outcome_class"] in ("Hit", "CR")
    metrics, levels = {}, {}
    for agent, a in acc.items():
        metrics[agent] = {
            "blind_following": a["blind"] / a["n"],
            "cross_checking": 1.0 - a["blind"] / a["n"],
            "tracking_score": a["tracking"],
            "detection_score": a["detection"],
            "total_score": a["tracking"] + a["detection"],
        }
        levels[agent] = int(round(100.0 * a["success"] / a["n"]))
    return metrics, levels


BEHAVIOR_DIMENSIONS = ("blind_following", "cross_checking", "tracking_score", "detection_score", "total_score")
PAIRS = ((0, 1), (0, 2), (1, 2))


def analysis_rows(values, labels, dimensions):
    summary = analysis.summary_table(values, labels, dimensions)
    rows = []
    for dim in dimensions:
        cells = summary[dim]
        groups = [[values[a][dim] for a in values if labels[a] == c] for c in tables.ARCHETYPES]
        anova, post = analysis.compare_dimension(groups)
        row = [dim]
        for c in tables.ARCHETYPES:
            row += [cells[c].mean, cells[c].sd]
        if anova is None:
            row += [None] * 4 + [None] * len(PAIRS)
        else:
            row += [anova.f_stat, anova.df_between, anova.df_within, anova.p_value]
            row += [float(post.adjusted_p[i, j]) for i, j in PAIRS]
        rows.append(row)
    return rows


def analysis_columns():
    cols = ["dimension"]
    for c in tables.ARCHETYPES:
        cols += [f"{c}_mean", f"{c}_sd"]
    cols += ["F", "df_between", "df_within", "p"]
    cols += [f"p_{tables.ARCHETYPES[i]}_{tables.ARCHETYPES[j]}" for i, j in PAIRS]
    return cols


def stage_analyze(cfg: PipelineConfig, out: Path, map_fn=map) -> list[str]:
    profiles = load_profiles(out)
    labels = load_labels(out)
    metrics, levels = behavior_metrics(out)
    values = {a: {**profiles[a], **metrics[a]} for a in labels}
    rows = analysis_rows(values, labels, tables.DIMENSIONS + BEHAVIOR_DIMENSIONS)

    level_keys = sorted(set(levels[a] for a in labels))
    table = np.array([[sum(1 for a in labels if labels[a] == c and levels[a] == lvl) for lvl in level_keys]
                      for c in tables.ARCHETYPES])
    keep_rows = table.sum(axis=1) > 0
    chi_rows = [(c, *table[i]) for i, c in enumerate(tables.ARCHETYPES)]
    try:
        chi = analysis.chi_squared_independence(table[keep_rows])
        chi_stats = [("chi2", chi.chi2), ("df", chi.df), ("p", chi.p_value)]
    except (analysis.DegenerateMargins, ValueError) as e:
        log.warning("chi-squared test skipped: %s", e)
        chi_stats = [("chi2", None), ("df", None), ("p", None)]
    with _Staging(out, "analyze") as st:
        csvio.write_table(st.path("analysis_report.csv"), analysis_columns(), rows)
        csvio.write_table(st.path("chi_squared.csv"), ["cluster", *(f"level_{lvl}" for lvl in level_keys)], chi_rows)
        csvio.write_table(st.path("chi_squared_stats.csv"), ("statistic", "value"), chi_stats)
    return ["analysis_report.csv", "chi_squared.csv", "chi_squared_stats.csv"]


# -- report -----------------------------------------------------------------

def load_params(out: Path, estimator: str = "map") -> dict[str, TrustParams]:
    rows = csvio.read_table(_need(out, "params.csv"), csvio.PARAM_COLUMNS)
    return {
        r["agent_id"]: TrustParams(float(r["alpha0"]), float(r["beta0"]), float(r["gain_success"]), float(r["gain_failure"]))
        for r in rows
        if r["estimator"] == estimator
    }


def stage_report(cfg: PipelineConfig, out: Path, map_fn=map, agents=None) -> list[str]:
    trajectories = csvio.ingest_trajectories(_need(out, "trajectories.csv"))
    params = load_params(out)
    wanted = set(agents) if agents else None
    written = []
    with _Staging(out, "report") as st:
        for traj in trajectories:
            if wanted is not None and traj.agent_id not in wanted:
                continue
            if traj.agent_id not in params:
                raise ValueError(f"no fitted parameters for {traj.agent_id}")
            pred = predicted_means(params[traj.agent_id], traj.outcomes)
            rows = [(i, float(t), float(p), bool(o)) for i, (t, p, o) in enumerate(zip(traj.reports, pred, traj.outcomes), 1)]
            name = f"reports/{traj.agent_id}.tsv"
            csvio.write_table(st.path(name), ("trial", "reported_trust", "predicted_trust", "outcome_success"), rows, "\t")
            written.append(name)
        if wanted is not None and not written:
            raise ValueError(f"unknown agent(s) {sorted(wanted)}")
    return written


# -- orchestration ----------------------------------------------------------

_NUMERICAL = (estimation.NonConvergence, ArithmeticError, clustering.AmbiguousLabeling, FloatingPointError)

STAGE_FUNCS = {
    "simulate": stage_simulate,
    "fit": stage_fit,
    "cluster": stage_cluster,
    "classify": stage_classify,
    "analyze": stage_analyze,
    "report": stage_report,
}


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: PipelineConfig, out: Path) -> dict:
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != MANIFEST and ".partial" not in str(p))
    manifest = {
        "version": __version__,
        "config": cfg.snapshot(),
        "digests": {str(p.relative_to(out).as_posix()): _digest(p) for p in files},
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def verify_manifest(out: Path) -> list[str]:
    """Files whose current digest differs from the manifest."""
    manifest = json.loads((Path(out) / MANIFEST).read_text(encoding="utf-8"))
    return [name for name, d in manifest["digests"].items() if not (Path(out) / name).exists() or _digest(Path(out) / name) != d]


def run_subcommand(name: str, cfg: PipelineConfig, agents=None) -> list[str]:
    """Run one stage (or ``all``); raises :class:`StageError` on failure."""
    if name != "all" and name not in STAGE_FUNCS:
        raise ValueError(f"unknown subcommand {name!r}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stages = STAGES if name == "all" else (name,)
    written = []
    with _mapper(cfg.jobs) as map_fn:
        for stage in stages:
            log.info("running %s", stage)
            try:
                kwargs = {"agents": agents} if stage == "report" else {}
                written += STAGE_FUNCS[stage](cfg, out, map_fn, **kwargs)
            except _NUMERICAL as e:
                raise StageError(stage, e, 4) from e
            except (ValueError, KeyError, FileNotFoundError, OSError) as e:
                raise StageError(stage, e, 3) from e
    if name == "all":
        write_manifest(cfg, out)
        written.append(MANIFEST)
    return written
