"""Synthetic data: planted-elbow curves and a full synthetic post corpus.

Two generator families live here.

The planted-elbow curve family builds popularity-shaped test curves with
an analytically controllable elbow: a steep head whose log slope joins a
gentle linear-in-x log-slope tail at a rounded corner. The family's true
elbow locations are evaluated by an independent finite-difference
reference (``reference_elbows``) and the inverse problem (place the
elbow at requested ranks) is solved by a damped fixed point
(``calibrate_elbow``).

The corpus generator draws a per-user skill from the country latent,
truncates the language's Zipf vocabulary at the skill frontier, and
samples post tokens from the truncated distribution. ``simulate`` keeps
everything as arrays; ``write_corpus`` serializes the *same draws* as a
JSONL post corpus plus lexicons, benchmark, and a ground-truth sidecar,
so the two paths are statistically identical by construction.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .lexicon.curves import PopularityCurve

# ---------------------------------------------------------------------------
# Planted-elbow curve family
# ---------------------------------------------------------------------------

REFERENCE_GRID = 160_001
# Corner rounding width as a fraction of the corner position: the kink's
# width in ranks then scales like the log-binning resolution does.
SHOULDER_FRACTION = 0.06
# Binomial noise: sigma is the absolute noise scale at popularity 0.5,
# so the implied user count is 0.25 / sigma^2.
NOISE_VARIANCE_NUM = 0.25


def _softplus(t: np.ndarray) -> np.ndarray:
    return np.where(t > 30.0, t, np.log1p(np.exp(np.minimum(t, 30.0))))


def _log_slope(x, corner, tail_slope, g0, gk, shoulder):
    head_slope = (g0 - gk) / corner
    return (
        gk
        - tail_slope * (x - corner)
        + (head_slope - tail_slope) * shoulder * _softplus((corner - x) / shoulder)
    )


def elbow_curve(
    xgrid: np.ndarray,
    corner: float,
    tail_slope: float,
    drop: float = 0.98,
    tail_log: float = 0.45,
    shoulder: float | None = None,
) -> np.ndarray:
    """Convex decreasing curve on [0, 1] with a planted elbow.

    The derivative is -exp(g(x)) where g is piecewise linear: a steep
    head segment joining a gentle tail segment at x = corner, rounded
    over ``shoulder``. The head height is solved (Newton on the log
    scale) so the total drop over [0, 1] equals ``drop``.
    """
    if shoulder is None:
        shoulder = min(0.004, corner / 3.0, tail_log / tail_slope / 3.0)
    g0 = tail_log + 2.2
    for _ in range(40):
        g = _log_slope(xgrid, corner, tail_slope, g0, tail_log, shoulder)
        integral = np.trapezoid(np.exp(g), xgrid)
        g0_new = g0 + np.log(drop / integral)
        if abs(g0_new - g0) < 1e-13:
            g0 = g0_new
            break
        g0 = g0_new
    g = _log_slope(xgrid, corner, tail_slope, g0, tail_log, shoulder)
    slope = -np.exp(g)
    steps = (slope[1:] + slope[:-1]) / 2.0 * np.diff(xgrid)
    return 1.0 + np.concatenate(([0.0], np.cumsum(steps)))


def reference_elbows(
    corner: float,
    tail_slope: float,
    n: int = REFERENCE_GRID,
    **family_kwargs,
) -> tuple[float, float]:
    """Independent finite-difference elbow evaluator for the family.

    Computes the unit-square curvature argmax and the chord-distance
    argmax directly from dense finite differences, with a boundary
    margin; used to verify where a parameterized curve actually puts its
    elbow, independently of the spline detection pipeline.
    """
    x = np.linspace(0.0, 1.0, n)
    y = elbow_curve(x, corner, tail_slope, **family_kwargs)
    yn = (y - y.min()) / (y.max() - y.min())
    d1 = np.gradient(yn, x)
    d2 = np.gradient(d1, x)
    kappa = np.abs(d2) / (1.0 + d1**2) ** 1.5
    margin = slice(400, -400)
    k0 = x[margin][int(np.argmax(kappa[margin]))]
    k1 = x[int(np.argmax((1.0 - x) - yn))]
    return float(k0), float(k1)


def calibrate_elbow(
    k0_frac: float,
    k1_frac: float,
    tol: float = 1e-5,
    **family_kwargs,
) -> tuple[float, float, tuple[float, float], int]:
    """Solve for (corner, tail_slope) putting the true elbows at the targets.

    Damped fixed point: the corner tracks the curvature max directly and
    the tail slope scales by the width ratio. Targets are fractions of
    the rank span.
    """
    corner = max(k0_frac, 1e-3)
    tail_slope = 0.47 / max(k1_frac - k0_frac, 1e-4)
    k0 = k1 = float("nan")
    iters = 0
    for iters in range(50):
        k0, k1 = reference_elbows(corner, tail_slope, **family_kwargs)
        if abs(k0 - k0_frac) < tol and abs(k1 - k1_frac) < tol:
            return corner, tail_slope, (k0, k1), iters
        corner = float(np.clip(corner + 0.85 * (k0_frac - k0), 5e-4, 0.6))
        width = max(k1 - k0, 2e-4)
        tail_slope = float(
            np.clip(tail_slope * (width / max(k1_frac - k0_frac, 2e-4)) ** 0.85, 0.5, 5000.0)
        )
    return corner, tail_slope, (k0, k1), iters


def planted_curve(
    rank_max: int,
    k0: float,
    k1: float,
    noise_sigma: float = 0.0,
    seed: int | tuple | None = None,
    language: str = "xx",
    params: dict | None = None,
) -> tuple[PopularityCurve, dict]:
    """Popularity curve with a planted elbow at ranks (k0, k1).

    Noise is binomial user sampling: popularity at each rank is the
    observed share among n = 0.25 / sigma^2 users, which has standard
    deviation sigma at popularity 0.5. Pass ``params`` (from a previous
    calibration) to skip the fixed-point solve.
    """
    if not (0 < k0 < k1 <= rank_max):
        raise ConfigError(f"planted elbows must satisfy 0 < k0 < k1 <= rank_max, got ({k0}, {k1})")
    if params is None:
        shoulder = SHOULDER_FRACTION * (k0 / rank_max)
        corner, tail_slope, achieved, _ = calibrate_elbow(
            k0 / rank_max, k1 / rank_max, shoulder=shoulder
        )
        params = {
            "corner": corner,
            "tail_slope": tail_slope,
            "shoulder": shoulder,
            "achieved_k0": achieved[0] * rank_max,
            "achieved_k1": achieved[1] * rank_max,
        }
    x = np.linspace(0.0, 1.0, REFERENCE_GRID)
    y = elbow_curve(
        x, params["corner"], params["tail_slope"], shoulder=params["shoulder"]
    )
    ranks = np.arange(0.0, rank_max)
    clean = np.interp(ranks / (rank_max - 1), x, y)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        n_users = int(round(NOISE_VARIANCE_NUM / noise_sigma**2))
        pop = rng.binomial(n_users, np.clip(clean, 0.0, 1.0)) / n_users
    else:
        n_users = None
        pop = np.clip(clean, 0.0, 1.0)
    curve = PopularityCurve(language=language, ranks=ranks, popularity=pop, n_users=n_users)
    return curve, dict(params, noise_sigma=noise_sigma, rank_max=rank_max)


# ---------------------------------------------------------------------------
# Synthetic post corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic corpus generator.

    Skill s = clip(latent + gender/region offsets + N(0, skill_noise));
    the user's accessible vocabulary is the top ceil(V * s) Zipf ranks
    and post tokens sample the truncated (renormalized) Zipf.

    The default exponent of 0 samples uniformly within the accessible
    vocabulary. That keeps the popularity curve flat up to the lowest
    vocabulary frontier, so its only elbow is the frontier itself and
    the detected band tracks skill rather than token-budget decay.
    Positive exponents tilt usage toward common words; the curve then
    develops a budget-driven head elbow well before the frontier.
    """

    n_countries: int = 100
    users_per_country: tuple[int, int] = (2000, 2000)
    languages: tuple[str, ...] = ("en", "es", "ru")
    latents: tuple[float, ...] | None = None
    latent_range: tuple[float, float] = (0.5, 0.85)
    zipf_exponent: float = 0.0
    vocab_size: int = 1800
    language_vocab_factors: tuple[float, ...] = (1.0, 1.0, 1.0)
    skill_noise: float = 0.05
    gender_effect: float = 0.0
    region_effect: float = 0.0
    n_regions: int = 3
    posts_per_user: tuple[int, int] = (2, 6)
    tokens_per_post: tuple[int, int] = (30, 60)
    benchmark_noise: float = 0.03
    seed: int = 0

    def country_names(self) -> list[str]:
        return [f"C{i:03d}" for i in range(self.n_countries)]

    def country_language(self, i: int) -> str:
        return self.languages[i % len(self.languages)]

    def language_vocab(self, language: str) -> int:
        idx = self.languages.index(language)
        factor = self.language_vocab_factors[idx % len(self.language_vocab_factors)]
        return max(1, int(round(self.vocab_size * factor)))

    def validate(self) -> None:
        if self.n_countries < 1:
            raise ConfigError("n_countries must be >= 1")
        if self.users_per_country[0] < 1 or self.users_per_country[0] > self.users_per_country[1]:
            raise ConfigError("users_per_country must be a nonempty (lo, hi) range")
        if not self.languages:
            raise ConfigError("at least one language required")
        if self.latents is not None and len(self.latents) != self.n_countries:
            raise ConfigError("latents must have one value per country")
        if not (0 < self.latent_range[0] < self.latent_range[1] <= 1):
            raise ConfigError("latent_range must satisfy 0 < lo < hi <= 1")
        if self.vocab_size < 50:
            raise ConfigError("vocab_size too small to contain a LoFF range")
        if self.posts_per_user[0] < 1:
            raise ConfigError("posts_per_user must start at >= 1")
        if self.tokens_per_post[0] < 1:
            raise ConfigError("tokens_per_post must start at >= 1")


@dataclass(eq=False)
class LanguageSim:
    """One language's simulated population, as flat arrays.

    ``token_ranks`` holds every drawn token (0-based lexicon rank);
    ``post_user`` / ``post_len`` delimit posts for serialization.
    ``pair_user`` / ``pair_rank`` are the deduplicated (user, rank)
    incidences that define both the popularity curve and LoFF counts.
    """

    language: str
    vocab: int
    user_country: np.ndarray
    user_gender: np.ndarray  # 0 = female, 1 = male
    user_region: np.ndarray
    user_skill: np.ndarray
    user_posts: np.ndarray
    user_ids: list[str]
    post_user: np.ndarray
    post_len: np.ndarray
    token_ranks: np.ndarray
    pair_user: np.ndarray
    pair_rank: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.user_country)

    def popularity_curve(self) -> PopularityCurve:
        counts = np.bincount(self.pair_rank, minlength=self.vocab)
        return PopularityCurve(
            language=self.language,
            ranks=np.arange(self.vocab, dtype=float),
            popularity=counts / self.n_users,
            n_users=self.n_users,
        )

    def loff_counts(self, k0: int, k1: int) -> np.ndarray:
        """Per-user count of distinct ranks inside [k0, k1]."""
        in_band = (self.pair_rank >= k0) & (self.pair_rank <= k1)
        return np.bincount(self.pair_user[in_band], minlength=self.n_users)


@dataclass(eq=False)
class SimulatedCorpus:
    spec: SyntheticSpec
    countries: list[str]
    latents: np.ndarray
    benchmarks: np.ndarray
    country_language: dict[str, str]
    by_language: dict[str, LanguageSim]

    def sidecar(self) -> dict:
        spec_dict = dataclasses.asdict(self.spec)
        for key, value in spec_dict.items():
            if isinstance(value, tuple):
                spec_dict[key] = list(value)
        return {
            "spec": spec_dict,
            "countries": self.countries,
            "latents": [round(float(v), 10) for v in self.latents],
            "benchmarks": [round(float(v), 10) for v in self.benchmarks],
            "country_language": self.country_language,
            "language_vocab": {
                lang: sim.vocab for lang, sim in sorted(self.by_language.items())
            },
            "mean_skill": {
                country: round(float(v), 10) for country, v in self.mean_skill().items()
            },
        }

    def mean_skill(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for sim in self.by_language.values():
            for ci in np.unique(sim.user_country):
                mask = sim.user_country == ci
                out[self.countries[ci]] = float(sim.user_skill[mask].mean())
        return out


def _zipf_cdf(vocab: int, exponent: float) -> np.ndarray:
    weights = (np.arange(1, vocab + 1, dtype=float)) ** (-exponent)
    return np.cumsum(weights)


def simulate(spec: SyntheticSpec) -> SimulatedCorpus:
    """Draw the full synthetic population as arrays. Deterministic in seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    countries = spec.country_names()
    if spec.latents is not None:
        latents = np.asarray(spec.latents, dtype=float)
    else:
        latents = rng.uniform(spec.latent_range[0], spec.latent_range[1], spec.n_countries)
    benchmarks = np.clip(
        latents + rng.normal(0.0, spec.benchmark_noise, spec.n_countries), 0.005, 0.995
    )
    country_language = {c: spec.country_language(i) for i, c in enumerate(countries)}

    by_language: dict[str, LanguageSim] = {}
    for language in spec.languages:
        vocab = spec.language_vocab(language)
        cdf = _zipf_cdf(vocab, spec.zipf_exponent)
        idxs = [i for i, c in enumerate(countries) if country_language[c] == language]
        n_per = rng.integers(
            spec.users_per_country[0], spec.users_per_country[1] + 1, len(idxs)
        )
        user_country = np.repeat(np.asarray(idxs), n_per)
        n_users = len(user_country)
        user_gender = rng.integers(0, 2, n_users)
        user_region = rng.integers(0, spec.n_regions, n_users)
        region_offsets = rng.normal(0.0, spec.region_effect or 0.0, (spec.n_countries, spec.n_regions))
        skill = latents[user_country].copy()
        if spec.gender_effect:
            skill += np.where(user_gender == 0, spec.gender_effect, 0.0)
        if spec.region_effect:
            skill += region_offsets[user_country, user_region]
        skill += rng.normal(0.0, spec.skill_noise, n_users)
        skill = np.clip(skill, 0.02, 1.0)
        user_vocab = np.ceil(vocab * skill).astype(np.int64)

        user_posts = rng.integers(spec.posts_per_user[0], spec.posts_per_user[1] + 1, n_users)
        post_user = np.repeat(np.arange(n_users), user_posts)
        post_len = rng.integers(
            spec.tokens_per_post[0], spec.tokens_per_post[1] + 1, len(post_user)
        )
        token_user = np.repeat(post_user, post_len)
        mass = cdf[user_vocab[token_user] - 1]
        targets = rng.random(len(token_user)) * mass
        token_ranks = np.searchsorted(cdf, targets, side="right").astype(np.int64)

        key = token_user * vocab + token_ranks
        pair_key = np.unique(key)
        pair_user = (pair_key // vocab).astype(np.int64)
        pair_rank = (pair_key % vocab).astype(np.int64)

        user_ids = [f"{language}-u{local:07d}" for local in range(n_users)]
        by_language[language] = LanguageSim(
            language=language,
            vocab=vocab,
            user_country=user_country,
            user_gender=user_gender,
            user_region=user_region,
            user_skill=skill,
            user_posts=user_posts,
            user_ids=user_ids,
            post_user=post_user,
            post_len=post_len,
            token_ranks=token_ranks,
            pair_user=pair_user,
            pair_rank=pair_rank,
        )
    return SimulatedCorpus(
        spec=spec,
        countries=countries,
        latents=latents,
        benchmarks=benchmarks,
        country_language=country_language,
        by_language=by_language,
    )


GEO_GROUPS = (
    "Sub-Saharan Africa",
    "Europe, Northern America & Oceania",
    "Latin America & Caribbean",
    "Northern Africa, Western, Central & Southern Asia",
    "Eastern & South-Eastern Asia",
)


def write_corpus(spec: SyntheticSpec, outdir: str) -> SimulatedCorpus:
    """Serialize a simulated population: posts JSONL, lexicons, sidecar.

    Emits posts.jsonl, one lexicon file per language, benchmark.csv,
    population.csv, geo_groups.csv, and sidecar.json recording every
    latent parameter. Same seed, same bytes.
    """
    sim = simulate(spec)
    os.makedirs(outdir, exist_ok=True)
    rng = np.random.default_rng((spec.seed, 0xFACADE))

    with open(os.path.join(outdir, "posts.jsonl"), "w", encoding="utf-8") as fh:
        for language in spec.languages:
            lang = sim.by_language[language]
            boundaries = np.concatenate(([0], np.cumsum(lang.post_len)))
            for p, user in enumerate(lang.post_user):
                ranks = lang.token_ranks[boundaries[p] : boundaries[p + 1]]
                record = {
                    "user_id": lang.user_ids[user],
                    "country": sim.countries[lang.user_country[user]],
                    "region": f"{sim.countries[lang.user_country[user]]}-R{lang.user_region[user]}",
                    "gender": "female" if lang.user_gender[user] == 0 else "male",
                    "lang": language,
                    "text": " ".join(f"w{r}" for r in ranks),
                }
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    for language in spec.languages:
        lang = sim.by_language[language]
        with open(os.path.join(outdir, f"lexicon_{language}.txt"), "w", encoding="utf-8") as fh:
            for rank in range(lang.vocab):
                freq = max(1, int(round(1e9 * (rank + 1) ** (-spec.zipf_exponent))))
                fh.write(f"w{rank} {freq}\n")

    populations = rng.integers(500_000, 80_000_000, spec.n_countries)
    with open(os.path.join(outdir, "benchmark.csv"), "w", encoding="utf-8") as fh:
        fh.write("country,literacy_rate,schooling_years,internet_penetration,population\n")
        for i, country in enumerate(sim.countries):
            fh.write(
                f"{country},{sim.benchmarks[i]:.6f},{1.0 + 12.0 * sim.latents[i]:.3f},"
                f"0.9,{populations[i]}\n"
            )
    with open(os.path.join(outdir, "population.csv"), "w", encoding="utf-8") as fh:
        fh.write("country,population\n")
        for i, country in enumerate(sim.countries):
            fh.write(f"{country},{populations[i]}\n")
    with open(os.path.join(outdir, "geo_groups.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["country", "geo_group"])
        for i, country in enumerate(sim.countries):
            writer.writerow([country, GEO_GROUPS[i % len(GEO_GROUPS)]])

    with open(os.path.join(outdir, "sidecar.json"), "w", encoding="utf-8") as fh:
        json.dump(sim.sidecar(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return sim
