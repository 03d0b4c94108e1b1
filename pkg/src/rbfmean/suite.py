"""Benchmark suites: scenario grids, manifests, and reproducible generation.

A manifest JSON pins everything a suite run needs (plant parameters, the full
anomaly grid with resolved numeric parameters, episode counts, and the master
seed), so the dataset can be regenerated byte-identically from the manifest
alone. Episode seeds derive from (master seed, scenario index, split, episode
index).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from .core import EpisodeMatrix, write_episodes_jsonl
from .envgen import (
    ANOMALY_KINDS,
    AR_KINDS,
    AnomalySpec,
    CartpolePlant,
    LEVEL_MULTS,
    PDController,
    SEMANTIC_KINDS,
    default_linear_benchmark,
    make_ar_spec,
    simulate,
)
from .errors import ConfigError

MANIFEST_VERSION = 1
PLANT_NAMES = ("cartpole", "linear")
SPLITS = ("train", "val", "test")

DEFAULT_CARTPOLE = {
    "gains": [1.0, 2.0, 40.0, 8.0],
    "dither_std": 0.5,
    "init_scale": 0.05,
}
DEFAULT_LINEAR = {
    "n_dims": 4,
    "diag": 0.75,
    "shift": 0.1,
    "feedback_gain": 0.2,
    "process_noise_std": 0.05,
    "init_std": 0.5,
}

# Explicit semantic-anomaly magnitudes per plant; recorded into the manifest
# so a suite is reproducible without this table.
SEMANTIC_DEFAULTS: dict[str, dict[str, dict[str, dict[str, float]]]] = {
    "cartpole": {
        "action_factor": {"minor": {"factor": 1.5}, "severe": {"factor": 3.0}},
        "action_noise": {"minor": {"std": 1.0}, "severe": {"std": 4.0}},
        "action_offset": {"minor": {"offset": 1.0}, "severe": {"offset": 4.0}},
        "body_mass_factor": {"minor": {"factor": 1.5}, "severe": {"factor": 3.0}},
        "force_vector": {"minor": {"force": 2.0}, "severe": {"force": 8.0}},
    },
    "linear": {
        "action_factor": {"minor": {"factor": 1.5}, "severe": {"factor": 3.0}},
        "action_noise": {"minor": {"std": 0.3}, "severe": {"std": 1.0}},
        "action_offset": {"minor": {"offset": 0.3}, "severe": {"offset": 1.0}},
        "force_vector": {"minor": {"force": 0.3}, "severe": {"force": 1.0}},
    },
}


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    plant: str
    kind: str
    level: str
    ar_order: int | None
    params: dict[str, Any]
    onset: int

    def anomaly_spec(self) -> AnomalySpec:
        return AnomalySpec(kind=self.kind, level=self.level, params=self.params, onset=self.onset)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "plant": self.plant,
            "kind": self.kind,
            "level": self.level,
            "ar_order": self.ar_order,
            "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()},
            "onset": self.onset,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Scenario":
        return cls(
            scenario_id=doc["scenario_id"],
            plant=doc["plant"],
            kind=doc["kind"],
            level=doc["level"],
            ar_order=doc.get("ar_order"),
            params=dict(doc["params"]),
            onset=int(doc["onset"]),
        )


def build_plant(name: str, params: dict[str, Any]):
    """Plant + scripted controller from manifest parameters."""
    if name == "cartpole":
        p = {**DEFAULT_CARTPOLE, **params}
        plant = CartpolePlant(init_scale=float(p["init_scale"]))
        controller = PDController(gains=tuple(float(g) for g in p["gains"]), dither_std=float(p["dither_std"]))
        return plant, controller
    if name == "linear":
        p = {**DEFAULT_LINEAR, **params}
        return default_linear_benchmark(
            n_dims=int(p["n_dims"]),
            diag=float(p["diag"]),
            shift=float(p["shift"]),
            feedback_gain=float(p["feedback_gain"]),
            process_noise_std=float(p["process_noise_std"]),
            init_std=float(p["init_std"]),
        )
    raise ConfigError(f"unknown plant {name!r}, expected one of {PLANT_NAMES}")


def build_grid(
    plants: list[str],
    ar_kinds: list[str],
    ar_levels: list[str],
    ar_orders: list[int],
    semantic_kinds: list[str],
    semantic_levels: list[str],
    onset: int,
) -> list[Scenario]:
    """Cross the requested axes into a scenario list.

    (plant, kind) pairs that do not apply (body_mass_factor on the linear
    plant) are skipped.
    """
    for kind in list(ar_kinds) + list(semantic_kinds):
        if kind not in ANOMALY_KINDS:
            raise ConfigError(f"unknown anomaly kind {kind!r}")
    for kind in ar_kinds:
        if kind not in AR_KINDS:
            raise ConfigError(f"{kind!r} is not an AR anomaly kind")
    for level in ar_levels:
        if level not in LEVEL_MULTS:
            raise ConfigError(f"unknown AR level {level!r}, expected one of {tuple(LEVEL_MULTS)}")
    scenarios = []
    for plant in plants:
        if plant not in PLANT_NAMES:
            raise ConfigError(f"unknown plant {plant!r}, expected one of {PLANT_NAMES}")
        for kind in ar_kinds:
            for level in ar_levels:
                for order in ar_orders:
                    spec = make_ar_spec(kind, level, int(order), onset)
                    scenarios.append(
                        Scenario(
                            scenario_id=f"{plant}-{kind}-{level}-ar{order}",
                            plant=plant,
                            kind=kind,
                            level=level,
                            ar_order=int(order),
                            params=dict(spec.params),
                            onset=onset,
                        )
                    )
        for kind in semantic_kinds:
            if kind not in SEMANTIC_KINDS:
                raise ConfigError(f"{kind!r} is not a semantic anomaly kind")
            table = SEMANTIC_DEFAULTS[plant]
            if kind not in table:
                continue  # e.g. body_mass_factor on the linear plant
            for level in semantic_levels:
                if level not in table[kind]:
                    raise ConfigError(f"no default magnitude for {plant}/{kind}/{level}")
                scenarios.append(
                    Scenario(
                        scenario_id=f"{plant}-{kind}-{level}",
                        plant=plant,
                        kind=kind,
                        level=level,
                        ar_order=None,
                        params=dict(table[kind][level]),
                        onset=onset,
                    )
                )
    return scenarios


def build_manifest(
    seed: int,
    scenarios: list[Scenario],
    counts: dict[str, int],
    episode_length: int,
    plants: dict[str, dict[str, Any]] | None = None,
) -> dict[str, Any]:
    for split in SPLITS:
        if counts.get(split, 0) < 1:
            raise ConfigError(f"episode count for split {split!r} must be >= 1")
    return {
        "version": MANIFEST_VERSION,
        "seed": int(seed),
        "episode_length": int(episode_length),
        "counts": {s: int(counts[s]) for s in SPLITS},
        "plants": plants or {"cartpole": dict(DEFAULT_CARTPOLE), "linear": dict(DEFAULT_LINEAR)},
        "scenarios": [sc.to_dict() for sc in scenarios],
    }


def manifest_scenarios(manifest: dict[str, Any]) -> list[Scenario]:
    if manifest.get("version") != MANIFEST_VERSION:
        raise ConfigError(f"unsupported manifest version {manifest.get('version')!r}")
    return [Scenario.from_dict(doc) for doc in manifest["scenarios"]]


def episode_seed(master_seed: int, scenario_index: int, split: str, episode_index: int) -> int:
    """Disjoint, reproducible per-episode seeds."""
    split_tag = SPLITS.index(split)
    seq = np.random.SeedSequence((int(master_seed), int(scenario_index), split_tag, int(episode_index)))
    return int(seq.generate_state(1, np.uint64)[0])


def generate_scenario_split(
    manifest: dict[str, Any], scenario_index: int, split: str
) -> Iterator[EpisodeMatrix]:
    """Episodes for one (scenario, split); train episodes are clean."""
    scenario = manifest_scenarios(manifest)[scenario_index]
    plant, controller = build_plant(scenario.plant, manifest["plants"].get(scenario.plant, {}))
    n_steps = manifest["episode_length"]
    spec = None if split == "train" else scenario.anomaly_spec()
    for j in range(manifest["counts"][split]):
        seed = episode_seed(manifest["seed"], scenario_index, split, j)
        yield simulate(
            plant,
            controller,
            n_steps,
            seed,
            spec=spec,
            meta={
                "scenario": scenario.scenario_id,
                "plant": scenario.plant,
                "kind": scenario.kind if spec is not None else None,
                "level": scenario.level if spec is not None else None,
                "ar_order": scenario.ar_order if spec is not None else None,
                "split": split,
                "index": j,
                "master_seed": manifest["seed"],
            },
        )


def generate_suite(manifest: dict[str, Any], out_dir: str | Path) -> list[Path]:
    """Write every scenario's train/val/test JSONL files; returns paths written."""
    out_dir = Path(out_dir)
    written = []
    for idx, scenario in enumerate(manifest_scenarios(manifest)):
        scen_dir = out_dir / scenario.scenario_id
        scen_dir.mkdir(parents=True, exist_ok=True)
        for split in SPLITS:
            path = scen_dir / f"{split}.jsonl"
            write_episodes_jsonl(path, generate_scenario_split(manifest, idx, split))
            written.append(path)
    return written
