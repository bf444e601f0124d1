"""Campaign driver: seeded Monte Carlo over placements, CSV/CDF output, CLI.

Placement ``i`` always uses the seed derived from ``(master seed, i)``, so
results do not depend on the order placements are processed in. Within a
placement, the inner realizations (phases, pilot noise, estimates) are shared
by every architecture/processing/combiner variant evaluated on it; a sweep
therefore yields exactly the rows that separate campaigns would.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .association import ServiceMap, ap_centric, fully_connected, ue_centric
from .channel import channel_tensor
from .estimation import SceGrids
from .performance import (
    CSI_KINDS,
    combiners_for,
    draw_realizations,
    moments_from_draws,
    sinr_centralized,
    sinr_decentralized_opt,
    spectral_efficiency,
)
from .scenario import ConfigError, GlobalConfig, generate_scenario

log = logging.getLogger(__name__)

ARCHS = ("ap_centric", "ue_centric", "fully_connected", "mmimo")
PROCS = ("cen", "dec")
COMBINERS = ("mr", "przf")
CSV_COLUMNS = (
    "placement_id",
    "ue_id",
    "arch",
    "proc",
    "combiner",
    "csi",
    "served",
    "gamma",
    "se_bits_per_hz",
    "degenerate_flag",
)
EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

_SYSTEM_FIELDS = tuple(f.name for f in fields(GlobalConfig))
DESK_SYSTEM = {"M": 9, "N_ap": 4, "K": 10, "area_side": 250.0}


@dataclass(frozen=True)
class Variant:
    """One way of serving and combining on a fixed placement."""

    arch: str = "fully_connected"
    proc: str = "cen"
    combiner: str = "przf"
    k_n: int | None = None
    m_n: int | None = None

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ConfigError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.proc not in PROCS:
            raise ConfigError(f"proc must be one of {PROCS}, got {self.proc!r}")
        if self.combiner not in COMBINERS:
            raise ConfigError(f"combiner must be one of {COMBINERS}, got {self.combiner!r}")
        if self.arch == "ap_centric" and self.k_n is None:
            raise ConfigError("ap_centric requires k_n")
        if self.arch == "ue_centric" and self.m_n is None:
            raise ConfigError("ue_centric requires m_n")

    @property
    def label(self) -> str:
        extra = {"ap_centric": f"(k_n={self.k_n})", "ue_centric": f"(m_n={self.m_n})"}.get(self.arch, "")
        return f"{self.arch}{extra}/{self.proc}/{self.combiner}"


@dataclass(frozen=True)
class CampaignConfig:
    system: GlobalConfig = field(default_factory=lambda: GlobalConfig(**DESK_SYSTEM))
    arch: str = "fully_connected"
    k_n: int | None = None
    m_n: int | None = None
    proc: str = "cen"
    combiner: str = "przf"
    csi: str = "sce"
    placements: int = 200
    n_exp: int = 100
    seed: int = 0
    out: str = "results"

    def __post_init__(self):
        if self.csi not in CSI_KINDS:
            raise ConfigError(f"csi must be one of {CSI_KINDS}, got {self.csi!r}")
        if self.placements < 1:
            raise ConfigError("placements must be positive")
        if self.n_exp < 2:
            raise ConfigError("n_exp must be at least 2")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        v = self.variant  # validates arch/proc/combiner
        sysc = effective_system(self.system, v.arch)
        if v.k_n is not None and v.arch == "ap_centric" and not 1 <= v.k_n <= sysc.K:
            raise ConfigError(f"k_n must lie in [1, {sysc.K}]")
        if v.m_n is not None and v.arch == "ue_centric" and not 1 <= v.m_n <= sysc.M:
            raise ConfigError(f"m_n must lie in [1, {sysc.M}]")
        if sysc.T_p < sysc.K:
            raise ConfigError(f"T_p={sysc.T_p} < K={sysc.K}: pilot reuse is not supported")

    @property
    def variant(self) -> Variant:
        return Variant(self.arch, self.proc, self.combiner, self.k_n, self.m_n)

    def to_mapping(self) -> dict:
        flat = asdict(self.system)
        flat.update({f.name: getattr(self, f.name) for f in fields(self) if f.name != "system"})
        return flat

    @classmethod
    def from_mapping(cls, data: dict) -> "CampaignConfig":
        known = set(_SYSTEM_FIELDS) | {f.name for f in fields(cls)} - {"system"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        sys_kw = {k: v for k, v in data.items() if k in _SYSTEM_FIELDS}
        rest = {k: v for k, v in data.items() if k not in _SYSTEM_FIELDS}
        try:
            return cls(system=GlobalConfig(**{**DESK_SYSTEM, **sys_kw}), **rest)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def effective_system(system: GlobalConfig, arch: str) -> GlobalConfig:
    """The co-located architecture pools all antennas into one AP."""
    if arch != "mmimo" or system.M == 1:
        return system
    return replace(system, M=1, N_ap=system.M * system.N_ap)


@dataclass(frozen=True)
class SeSample:
    placement_id: int
    ue_id: int
    se: float
    served: bool
    gamma: float
    degenerate: bool


def placement_seed(master_seed: int, placement_id: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(placement_id,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def inner_rng(scenario_seed: int) -> np.random.Generator:
    # sub-streams 0 and 1 are taken by UE and AP placement
    return np.random.default_rng(np.random.SeedSequence(scenario_seed, spawn_key=(2,)))


def service_map_for(variant: Variant, scenario) -> ServiceMap:
    cfg = scenario.config
    if variant.arch == "ap_centric":
        return ap_centric(scenario, variant.k_n)
    if variant.arch == "ue_centric":
        return ue_centric(scenario, variant.m_n)
    return fully_connected(cfg.M, cfg.K)


def _evaluate(variant, scenario, real, placement_id) -> tuple[list[SeSample], ServiceMap]:
    cfg = scenario.config
    service = service_map_for(variant, scenario)
    V = combiners_for(real, service, variant.combiner, variant.proc, cfg.tx_power, cfg.noise_power)
    moments = moments_from_draws(V, real.H, service, cfg.noise_power / cfg.tx_power)
    rows = []
    for ms in moments:
        served = bool(ms.serving.any())
        if not served:
            gamma = 0.0
        elif variant.proc == "dec":
            gamma = sinr_decentralized_opt(ms, cfg.tx_power)
        else:
            gamma = sinr_centralized(ms)
        degenerate = not math.isfinite(gamma)
        se = math.inf if degenerate else float(spectral_efficiency(gamma, cfg.T_u, cfg.T_c))
        rows.append(SeSample(placement_id, ms.k, se, served, float(gamma), degenerate))
    return rows, service


@dataclass
class SweepResult:
    samples: dict[Variant, list[SeSample]]
    serving: dict[Variant, list[list[list[int]]]]


def run_sweep(config: CampaignConfig, variants, grids: SceGrids = SceGrids(), progress=None) -> SweepResult:
    """Evaluate several variants on the same placements and inner draws.

    ``config`` supplies the system, CSI mode, placement count, N_exp and
    seed; its own variant fields are ignored. Variants are grouped by the
    effective system (the co-located case has a different AP layout).
    """
    variants = list(dict.fromkeys(variants))
    groups: dict[GlobalConfig, list[Variant]] = {}
    for v in variants:
        groups.setdefault(effective_system(config.system, v.arch), []).append(v)

    samples = {v: [] for v in variants}
    serving = {v: [] for v in variants}
    for system, vs in groups.items():
        for i in range(config.placements):
            seed = placement_seed(config.seed, i)
            scenario = generate_scenario(system, seed)
            real = draw_realizations(
                scenario, config.csi, config.n_exp, inner_rng(seed), grids, channel_tensor(scenario)
            )
            for v in vs:
                rows, service = _evaluate(v, scenario, real, i)
                samples[v].extend(rows)
                serving[v].append(service.serving_lists())
            if progress is not None:
                progress(i)
    return SweepResult(samples, serving)


def run_campaign(config: CampaignConfig, grids: SceGrids = SceGrids()) -> list[SeSample]:
    return run_sweep(config, [config.variant], grids).samples[config.variant]


def empirical_cdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sorted values and the fraction of samples at or below each."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    xs = np.sort(x)
    uniq = np.unique(xs)
    probs = np.searchsorted(xs, uniq, side="right") / xs.size
    return uniq, probs


def cdf_quantile(values, probs, q: float) -> float:
    """Smallest value whose CDF reaches ``q``."""
    i = int(np.searchsorted(probs, q - 1e-12, side="left"))
    return float(values[min(i, len(values) - 1)])


def _fmt(x: float) -> str:
    return repr(float(x))


def write_samples_csv(path, samples, config: CampaignConfig, variant: Variant | None = None) -> None:
    v = variant or config.variant
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in samples:
            w.writerow(
                [
                    s.placement_id,
                    s.ue_id,
                    v.arch,
                    v.proc,
                    v.combiner,
                    config.csi,
                    int(s.served),
                    _fmt(s.gamma),
                    _fmt(s.se),
                    int(s.degenerate),
                ]
            )


def write_cdf_csv(path, samples) -> None:
    values, probs = empirical_cdf([s.se for s in samples])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("se_bits_per_hz", "cdf"))
        for x, p in zip(values, probs):
            w.writerow((_fmt(x), _fmt(p)))


def write_outputs(out_dir, config: CampaignConfig, result: SweepResult) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    v = config.variant
    samples = result.samples[v]
    write_samples_csv(out / "samples.csv", samples, config)
    write_cdf_csv(out / "cdf.csv", samples)
    (out / "service_map.json").write_text(
        json.dumps({"variant": v.label, "placements": result.serving[v]}, separators=(",", ":"))
    )
    se = np.array([s.se for s in samples])
    summary = {
        "variant": v.label,
        "csi": config.csi,
        "rows": len(samples),
        "median_se": float(np.median(se)),
        "mean_se": float(np.mean(se[np.isfinite(se)])) if np.isfinite(se).any() else None,
        "unserved_share": float(np.mean([not s.served for s in samples])),
        "degenerate_rows": int(sum(s.degenerate for s in samples)),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    (out / "config.yaml").write_text(yaml.safe_dump(config.to_mapping(), sort_keys=False))


def load_config(path) -> CampaignConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration file must hold a key-value mapping")
    return CampaignConfig.from_mapping(data)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cellfree-los",
        description="Uplink SE campaign for line-of-sight cell-free massive MIMO.",
    )
    p.add_argument("--config", help="YAML file with CampaignConfig keys")
    p.add_argument("--seed", type=int)
    p.add_argument("--placements", type=int)
    p.add_argument("--arch", choices=ARCHS)
    p.add_argument("--k-n", dest="k_n", type=int, help="UEs per AP for ap_centric")
    p.add_argument("--m-n", dest="m_n", type=int, help="APs per UE for ue_centric")
    p.add_argument("--combiner", choices=COMBINERS)
    p.add_argument("--proc", choices=PROCS)
    p.add_argument("--csi", choices=CSI_KINDS)
    p.add_argument("--n-exp", dest="n_exp", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        data = {}
        if args.config:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
            if not isinstance(data, dict):
                raise ConfigError("configuration file must hold a key-value mapping")
        for key in ("seed", "placements", "arch", "k_n", "m_n", "combiner", "proc", "csi", "n_exp", "out"):
            value = getattr(args, key)
            if value is not None:
                data[key] = value
        config = CampaignConfig.from_mapping(data)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except yaml.YAMLError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    log.info("running %s, csi=%s, %d placements", config.variant.label, config.csi, config.placements)
    result = run_sweep(config, [config.variant], progress=lambda i: log.info("placement %d done", i))
    try:
        write_outputs(config.out, config, result)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
