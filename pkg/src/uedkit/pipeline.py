"""The four pipeline stages. Stages communicate only through files."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict
from importlib import resources
from pathlib import Path

from . import corpus as corpus_mod
from .config import RunConfig
from .dynamics import (DENSITY_CATEGORIES, DegenerateCovarianceError, HomeBase2D,
                       MonthlyAccumulator, emotional_variability, era_compare, era_of, ev_2d,
                       home_base_1d, home_base_2d, per_post_density, rolling_mean)
from .errors import ConfigError, DataError
from .lexicon import (CATEGORIES, SCORE_SCALE, Scorer, load_emotion_lexicon,
                      load_warmth_lexicon, tokenize)
from .parallel import chunked
from .providers import HttpChatClient, HttpEmbeddingProvider, MockChatClient, MockEmbeddingProvider
from .report import (TreemapSpec, render_ellipses, render_timeseries, render_treemap,
                     top_k_low_words, write_manifest)
from .stance import (PromptTemplate, SWEEP_TEMPERATURES, normalize_label, aggregate_reports,
                     classify, evaluate, monthly_proportions, sample_monthly)
from .stats import mann_whitney, percent_change

logger = logging.getLogger(__name__)

SCORE_CHUNK = 20_000
HOME_BASE_DIMS = ("warmth", "sociability", "trust", "competence")


def _need_path(value, key):
    if not value:
        raise ConfigError(f"missing required path: {key}")
    p = Path(value)
    if not p.exists():
        raise ConfigError(f"{key} does not exist: {value}")
    return p


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def load_lexicons(cfg: RunConfig):
    lexdir = _need_path(cfg.lexicons, "lexicons")
    exclusions = cfg.exclusions or None
    elex = load_emotion_lexicon(_need_path(lexdir / cfg.emotion_lexicon, "emotion lexicon"), exclusions)
    wlex = load_warmth_lexicon(_need_path(lexdir / cfg.warmth_lexicon, "warmth lexicon"), exclusions)
    return elex, wlex


# -- ingest -----------------------------------------------------------------------

def make_embedding_provider(cfg: RunConfig):
    if cfg.embedding_provider == "mock":
        return MockEmbeddingProvider()
    return HttpEmbeddingProvider(cfg.embedding_url, cfg.embedding_batch_size,
                                 cfg.embedding_retries, cfg.embedding_backoff)


def run_ingest(cfg: RunConfig, out) -> corpus_mod.CorpusSummary:
    src = _need_path(cfg.input, "input")
    icfg = corpus_mod.IngestConfig(filter_enabled=cfg.filter_enabled, anchor=cfg.filter_anchor,
                                   threshold=cfg.filter_threshold, order=cfg.pipeline_order,
                                   workers=cfg.workers, batch_size=cfg.embedding_batch_size)
    provider = make_embedding_provider(cfg) if cfg.filter_enabled else None
    summary = corpus_mod.ingest(src, out, icfg, provider)
    cfg.write_frozen(out)
    write_manifest(out)
    return summary


# -- analyze ----------------------------------------------------------------------

_worker_scorer: Scorer | None = None


def _init_worker(scorer):
    global _worker_scorer
    _worker_scorer = scorer


def _score_lines(lines) -> MonthlyAccumulator:
    acc = MonthlyAccumulator()
    scorer = _worker_scorer
    for line in lines:
        obj = json.loads(line)
        acc.add(scorer.score_tokens(obj["id"], obj["created_at"][:7], tokenize(obj["text"])))
    return acc


def _corpus_file(path) -> Path:
    p = Path(path)
    return p / "corpus.jsonl" if p.is_dir() else p


def aggregate_corpus(corpus_path, scorer: Scorer, workers: int = 1,
                     chunk_size: int = SCORE_CHUNK) -> MonthlyAccumulator:
    """Stream a canonical corpus through the scorer into monthly totals.

    Only one chunk of lines per worker is held in memory at a time.
    """
    global _worker_scorer
    acc = MonthlyAccumulator()
    with open(_corpus_file(corpus_path), encoding="utf-8") as fh:
        lines = (line for line in fh if line.strip())
        chunks = chunked(lines, chunk_size)
        if workers <= 1:
            _worker_scorer = scorer
            parts = map(_score_lines, chunks)
        else:
            parts = _pool_map(chunks, scorer, workers)
        for part in parts:
            acc.merge(part)
    return acc


def _pool_map(chunks, scorer, workers):
    from collections import deque
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(scorer,)) as pool:
        pending = deque()
        for chunk in chunks:
            pending.append(pool.submit(_score_lines, chunk))
            if len(pending) >= 2 * workers:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def write_monthly_densities(acc: MonthlyAccumulator, path) -> None:
    rows = []
    for cat in DENSITY_CATEGORIES:
        for b in acc.densities(cat):
            rows.append((b.bin, cat, b.emotion_word_count, b.token_total, repr(b.density)))
    rows.sort(key=lambda r: (r[0], DENSITY_CATEGORIES.index(r[1])))
    _write_csv(path, ["month", "category", "emotion_word_count", "token_total", "density"], rows)


def run_analyze(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = _need_path(cfg.corpus, "corpus")
    elex, wlex = load_lexicons(cfg)
    scorer = Scorer(elex, wlex, cfg.low_threshold)
    acc = aggregate_corpus(corpus_path, scorer, cfg.workers)
    if not acc.bins:
        raise DataError(f"corpus {corpus_path} contains no posts")
    centered = cfg.rolling_mode == "centered"

    write_monthly_densities(acc, out / "monthly_densities.csv")

    rows = []
    for cat in DENSITY_CATEGORIES:
        bins = acc.densities(cat)
        rolled = rolling_mean([b.density for b in bins], cfg.rolling, centered)
        rows += [(b.bin, cat, repr(b.density), repr(r)) for b, r in zip(bins, rolled)]
    _write_csv(out / "rolling_densities.csv", ["month", "category", "density", "rolling_mean"], rows)

    warmth = {}
    rows = []
    for dim in HOME_BASE_DIMS:
        series = acc.warmth_series(dim, cfg.warmth_series)
        warmth[dim] = series
        rolled = rolling_mean([v for _, v in series], cfg.rolling, centered)
        for (m, v), r in zip(series, rolled):
            rows.append((m, dim, repr(v), repr(r), acc.bins[m].hits))
    _write_csv(out / "monthly_warmth.csv", ["month", "dimension", "mean", "rolling_mean", "hits"], rows)

    # era comparison
    rows = []
    for cat in DENSITY_CATEGORIES:
        try:
            es = era_compare(acc.densities(cat), cfg.split)[cat]
        except (ValueError, KeyError) as exc:
            logger.warning("era comparison skipped for %s: %s", cat, exc)
            continue
        mw = mann_whitney(es.pre, es.covid)
        try:
            pct = repr(percent_change(es.pre_mean, es.covid_mean))
        except ValueError:
            pct = ""
        rows.append((cat, repr(es.pre_mean), repr(es.pre_sd), repr(es.covid_mean), repr(es.covid_sd),
                     pct, repr(mw.p_value), str(mw.p_value < 0.05).lower(),
                     str(mw.p_value < 0.001).lower()))
    _write_csv(out / "era_report.csv",
               ["category", "pre_mean", "pre_sd", "covid_mean", "covid_sd", "pct_change", "p_value",
                "significant_at_0.05", "significant_at_0.001"], rows)

    home = {"alpha": cfg.alpha, "split": cfg.split, "unit": "month", "eras": {}}
    for era in ("pre", "covid"):
        months = [m for m, _ in warmth["warmth"] if era_of(m, cfg.split) == era]
        entry: dict = {"months": len(months)}
        series = {d: dict(warmth[d]) for d in HOME_BASE_DIMS}
        for dim in HOME_BASE_DIMS:
            vals = [series[dim][m] for m in months if m in series[dim]]
            if len(vals) >= 2:
                hb = home_base_1d(vals, cfg.alpha)
                entry[dim] = {"mean": hb.mean, "lower": hb.lower, "upper": hb.upper,
                              "n": hb.n, "variance": hb.variance, "t_crit": hb.t_crit,
                              "ev": emotional_variability(vals, cfg.ev_formula)}
        pts = [(series["warmth"][m], series["competence"][m]) for m in months
               if m in series["competence"]]
        if len(pts) >= 3:
            try:
                e = home_base_2d(pts, cfg.alpha)
                entry["ellipse"] = {"mean_w": e.mean_w, "mean_c": e.mean_c, "lambda1": e.lambda1,
                                    "lambda2": e.lambda2, "angle": e.angle, "psi": e.psi,
                                    "alpha": e.alpha, "n": e.n}
            except DegenerateCovarianceError as exc:
                entry["ellipse_error"] = str(exc)
            entry["ev_2d"] = ev_2d(pts, cfg.ev_formula)
        home["eras"][era] = entry
    with open(out / "home_base.json", "w", encoding="utf-8") as fh:
        json.dump(home, fh, indent=2, sort_keys=True)
        fh.write("\n")

    summary = {"months": len(acc.bins), "posts": sum(b.posts for b in acc.bins.values()),
               "tokens": sum(b.token_total for b in acc.bins.values()),
               "emotion_lexicon_words": len(elex), "warmth_lexicon_words": len(wlex)}
    with open(out / "analysis.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    cfg.write_frozen(out)
    write_manifest(out)
    return summary


# -- stance -----------------------------------------------------------------------

def make_chat_client(cfg: RunConfig):
    if cfg.llm_provider == "mock":
        return MockChatClient()
    return HttpChatClient(cfg.llm_url, cfg.llm_model, cfg.llm_api_key_env,
                          cfg.llm_retries, cfg.llm_backoff)


def load_template(cfg: RunConfig) -> PromptTemplate:
    if cfg.stance_prompt:
        text = _need_path(cfg.stance_prompt, "stance.prompt").read_text(encoding="utf-8")
        return PromptTemplate.parse(text, cfg.stance_target)
    return PromptTemplate.default(cfg.stance_target)


def read_gold(path):
    posts, labels = [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            lab = normalize_label(str(obj["label"]))
            if lab is None:
                raise DataError(f"{path}:{lineno}: unknown gold label {obj['label']!r}")
            text = corpus_mod.clean_text(obj["text"])
            posts.append(corpus_mod.PostRecord(str(obj["post_id"]), "", "", text, len(tokenize(text))))
            labels[str(obj["post_id"])] = lab.value
    return posts, labels


def _evaluate_runs(cfg, client, template, posts, gold, temperature, logdir):
    reports, failures = [], 0
    for i in range(cfg.stance_runs):
        run_id = f"eval-t{temperature}-r{i}"
        res = classify(posts, client, template, temperature, run_id, cfg.stance_concurrency,
                       logdir / f"{run_id}.log.jsonl")
        failures += len(res.failures)
        ok = {r.post_id: r.label for r in res.records}
        reports.append(evaluate(ok, {k: v for k, v in gold.items() if k in ok}))
    agg = aggregate_reports(reports)
    agg["temperature"] = temperature
    agg["parse_failures"] = failures
    return agg


def run_stance(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = _need_path(cfg.corpus, "corpus")
    elex, wlex = load_lexicons(cfg)
    scorer = Scorer(elex, wlex, cfg.low_threshold)
    client = make_chat_client(cfg)
    template = load_template(cfg)

    sample = sample_monthly(corpus_mod.iter_corpus(corpus_path), cfg.stance_per_month, cfg.stance_seed)
    res = classify(sample, client, template, cfg.stance_temperature, "run-0",
                   cfg.stance_concurrency, out / "stance_run-0.log.jsonl")
    with open(out / "stance_records.jsonl", "w", encoding="utf-8") as fh:
        for r in res.records:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")
    with open(out / "parse_failures.jsonl", "w", encoding="utf-8") as fh:
        for pid in res.failures:
            fh.write(json.dumps({"post_id": pid}) + "\n")

    props = monthly_proportions(sample, res.records)
    _write_csv(out / "monthly_stance_proportions.csv",
               ["month", "n_sampled", "favor_frac", "against_frac", "neutral_frac"],
               [(p["month"], p["n_sampled"], repr(p["favor_frac"]), repr(p["against_frac"]),
                 repr(p["neutral_frac"])) for p in props])

    # per-post low-warmth / low-competence densities by stance and era
    label_of = {r.post_id: r.label for r in res.records}
    scored = [(scorer.score(p), label_of.get(p.id)) for p in sample]
    eras = lambda s: era_of(s.month, cfg.split)
    rows = []
    for cat in ("low_warmth", "low_competence"):
        for stance in ("favor", "against"):
            subset = [s for s, lab in scored if lab == stance]
            means, _ = per_post_density(subset, cat, eras)
            pre, cov = means.get("pre"), means.get("covid")
            groups = {"pre": [], "covid": []}
            for s in subset:
                if s.token_count:
                    groups[eras(s)].append(s.count(cat) / s.token_count)
            pct = p_val = ""
            if pre and cov is not None:
                pct = repr(percent_change(pre, cov))
            if groups["pre"] and groups["covid"]:
                p_val = repr(mann_whitney(groups["pre"], groups["covid"]).p_value)
            rows.append((cat, stance, "" if pre is None else repr(pre),
                         "" if cov is None else repr(cov), pct, p_val,
                         len(groups["pre"]), len(groups["covid"])))
    _write_csv(out / "stance_density.csv",
               ["dimension", "stance", "pre_mean", "covid_mean", "pct_change", "p_value",
                "n_pre", "n_covid"], rows)

    treemaps = []
    for dim in ("low-warmth", "low-competence"):
        for stance in ("favor", "against"):
            texts = [p.text for p in sample if label_of.get(p.id) == stance]
            treemaps.append(top_k_low_words(texts, wlex, stance, dim, cfg.low_threshold,
                                            cfg.report_k, cfg.report_weight).to_dict())
    with open(out / "treemaps.json", "w", encoding="utf-8") as fh:
        json.dump(treemaps, fh, indent=2)
        fh.write("\n")

    result = {"sampled": len(sample), "labelled": len(res.records), "parse_failures": len(res.failures)}
    if cfg.stance_gold:
        posts, gold = read_gold(_need_path(cfg.stance_gold, "stance.gold"))
        logdir = out / "eval_logs"
        logdir.mkdir(exist_ok=True)
        report = _evaluate_runs(cfg, client, template, posts, gold, cfg.stance_temperature, logdir)
        if cfg.stance_sweep:
            report["sweep"] = {repr(t): _evaluate_runs(cfg, client, template, posts, gold, t, logdir)["accuracy"]
                               for t in SWEEP_TEMPERATURES}
        with open(out / "classification_report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        result["accuracy"] = report["accuracy"]["mean"]
    cfg.write_frozen(out)
    write_manifest(out)
    return result


# -- report -----------------------------------------------------------------------

def _find(root: Path, name: str, sub: str) -> Path | None:
    for cand in (root / name, root / sub / name, root.parent / sub / name):
        if cand.exists():
            return cand
    return None


def run_report(cfg: RunConfig, source, out) -> list[Path]:
    src = _need_path(source, "--from")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    made = []

    dens = _find(src, "rolling_densities.csv", "analyze")
    if dens is None:
        raise DataError(f"no rolling_densities.csv under {src}")
    rows = _read_csv(dens)
    for name, cats in (("emotions", [c for c in CATEGORIES if c not in ("positive", "negative")]),
                       ("sentiment", ["positive", "negative"])):
        raw = {c: [(r["month"], float(r["density"])) for r in rows if r["category"] == c] for c in cats}
        rolled = {c: [(r["month"], float(r["rolling_mean"])) for r in rows if r["category"] == c]
                  for c in cats}
        made.append(render_timeseries(raw, out / f"{name}_timeseries.svg", rolled,
                                      f"{name} word density per month"))

    warm = _find(src, "monthly_warmth.csv", "analyze")
    if warm is not None:
        rows = _read_csv(warm)
        for name, dims in (("warmth", ["warmth", "trust", "sociability"]), ("competence", ["competence"])):
            raw = {d: [(r["month"], float(r["mean"])) for r in rows if r["dimension"] == d] for d in dims}
            rolled = {d: [(r["month"], float(r["rolling_mean"])) for r in rows if r["dimension"] == d]
                      for d in dims}
            if any(raw.values()):
                made.append(render_timeseries(raw, out / f"{name}_timeseries.svg", rolled,
                                              f"{name} score per month"))

    hb = _find(src, "home_base.json", "analyze")
    if hb is not None:
        home = json.loads(hb.read_text(encoding="utf-8"))
        bases, names = [], []
        for era in ("pre", "covid"):
            e = home["eras"].get(era, {}).get("ellipse")
            if e:
                bases.append(HomeBase2D(e["mean_w"], e["mean_c"], e["lambda1"], e["lambda2"],
                                        e["angle"], e["psi"], e["alpha"], e["n"]))
                names.append(era)
        if bases:
            made.append(render_ellipses(bases, out / "home_bases.svg", names))

    era = _find(src, "era_report.csv", "analyze")
    if era is not None:
        (out / "era_report.csv").write_bytes(era.read_bytes())
        made.append(out / "era_report.csv")

    props = _find(src, "monthly_stance_proportions.csv", "stance")
    if props is not None:
        rows = _read_csv(props)
        series = {k: [(r["month"], float(r[f"{k}_frac"])) for r in rows]
                  for k in ("favor", "against", "neutral")}
        if rows:
            made.append(render_timeseries(series, out / "stance_proportions.svg",
                                          title="stance proportions per month"))
    tm = _find(src, "treemaps.json", "stance")
    if tm is not None:
        for d in json.loads(tm.read_text(encoding="utf-8")):
            spec = TreemapSpec.from_dict(d)
            made.append(render_treemap(spec, out / f"treemap_{spec.stance}_{spec.dimension}.svg"))
    for name in ("stance_density.csv", "classification_report.json"):
        f = _find(src, name, "stance")
        if f is not None:
            (out / name).write_bytes(f.read_bytes())
            made.append(out / name)
    cfg.write_frozen(out)
    write_manifest(out)
    return made


def bundled_path(*parts) -> Path:
    """Filesystem path of a file shipped in the package data directory."""
    return Path(str(resources.files("uedkit").joinpath("data", *parts)))
