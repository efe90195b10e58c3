"""Run configuration documents (JSON) and their conversion to protocol inputs.

A config looks like::

    {
      "protocol": "complex-1q",
      "target":  {"magnitudes": [0.6, 0.8], "phases": [0.3]},
      "channel": {"coefficients": [[0.6, 0.0], [0.8, 1.2]]},
      "trials": 100000,
      "seed": 7,
      "sweep": {"parameter": "a", "start": 0.1, "stop": 0.7071067811865476, "steps": 8}
    }

Real protocols take plain positive channel coefficients; complex protocols
take ``[magnitude, phase]`` pairs (a bare number means phase 0).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Any, Optional

from .protocol import (
    COEFFICIENT_NAMES,
    MAGNITUDE_NAMES,
    PHASE_NAMES,
    ChannelSpec,
    Protocol,
    TargetSpec,
    ValidationError,
    check_compatible,
)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int

    def grid(self) -> list[float]:
        n = self.steps
        return [self.start + (self.stop - self.start) * i / (n - 1) for i in range(n - 1)] + [self.stop]


@dataclass(frozen=True)
class RunConfig:
    protocol: Protocol
    target_magnitudes: tuple[float, ...]
    target_phases: tuple[float, ...]
    channel_magnitudes: tuple[float, ...]
    channel_phases: tuple[float, ...]
    trials: Optional[int] = None
    seed: Optional[int] = None
    sweep: Optional[SweepSpec] = None

    def target(self) -> TargetSpec:
        return TargetSpec(self.protocol, self.target_magnitudes, self.target_phases)

    def channel(self) -> ChannelSpec:
        kind = self.protocol.channel_kind
        if self.protocol.is_real:
            return ChannelSpec(kind, self.channel_magnitudes)
        return ChannelSpec.from_polar(kind, list(zip(self.channel_magnitudes, self.channel_phases)))

    def inputs(self) -> tuple[TargetSpec, ChannelSpec]:
        target, channel = self.target(), self.channel()
        check_compatible(target, channel)
        return target, channel

    def with_overrides(self, trials: Optional[int] = None, seed: Optional[int] = None) -> "RunConfig":
        return replace(self,
                       trials=self.trials if trials is None else trials,
                       seed=self.seed if seed is None else seed)

    def to_dict(self) -> dict[str, Any]:
        if self.protocol.is_real:
            coefs: list = list(self.channel_magnitudes)
        else:
            coefs = [[m, p] for m, p in zip(self.channel_magnitudes, self.channel_phases)]
        doc: dict[str, Any] = {
            "protocol": self.protocol.value,
            "target": {"magnitudes": list(self.target_magnitudes), "phases": list(self.target_phases)},
            "channel": {"coefficients": coefs},
        }
        if self.trials is not None:
            doc["trials"] = self.trials
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.sweep is not None:
            doc["sweep"] = {"parameter": self.sweep.parameter, "start": self.sweep.start,
                            "stop": self.sweep.stop, "steps": self.sweep.steps}
        return doc


def sweepable_parameters(protocol: Protocol) -> tuple[str, ...]:
    n = protocol.branch_count
    return MAGNITUDE_NAMES[:n] + COEFFICIENT_NAMES[:n] + PHASE_NAMES.get(protocol.phase_count, ())


def _number(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{what} must be a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"{what} must be finite")
    return x


def _integer(x: Any, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValidationError(f"{what} must be an integer, got {x!r}")
    return x


def config_from_dict(doc: dict[str, Any], validate: bool = True) -> RunConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    try:
        protocol = Protocol(doc["protocol"])
    except KeyError:
        raise ValidationError("config is missing 'protocol'") from None
    except ValueError:
        raise ValidationError(f"unknown protocol {doc['protocol']!r}; "
                              f"expected one of {[p.value for p in Protocol]}") from None

    target = doc.get("target")
    channel = doc.get("channel")
    if not isinstance(target, dict) or "magnitudes" not in target:
        raise ValidationError("config needs target.magnitudes")
    if not isinstance(channel, dict) or "coefficients" not in channel:
        raise ValidationError("config needs channel.coefficients")

    t_mags = tuple(_number(x, "target magnitude") for x in target["magnitudes"])
    t_phases = tuple(_number(x, "target phase") for x in target.get("phases", []))
    if not t_phases:
        t_phases = (0.0,) * protocol.phase_count

    mags, phases = [], []
    for entry in channel["coefficients"]:
        if isinstance(entry, (list, tuple)):
            if protocol.is_real:
                raise ValidationError(f"{protocol.value} takes plain real channel coefficients")
            if len(entry) != 2:
                raise ValidationError("complex channel coefficients are [magnitude, phase] pairs")
            mags.append(_number(entry[0], "channel magnitude"))
            phases.append(_number(entry[1], "channel phase"))
        else:
            mags.append(_number(entry, "channel coefficient"))
            phases.append(0.0)

    trials = doc.get("trials")
    seed = doc.get("seed")
    if trials is not None:
        trials = _integer(trials, "trials")
    if seed is not None:
        seed = _integer(seed, "seed")

    sweep = None
    if doc.get("sweep") is not None:
        sw = doc["sweep"]
        if not isinstance(sw, dict):
            raise ValidationError("sweep must be an object")
        try:
            sweep = SweepSpec(str(sw["parameter"]), _number(sw["start"], "sweep start"),
                              _number(sw["stop"], "sweep stop"), _integer(sw["steps"], "sweep steps"))
        except KeyError as exc:
            raise ValidationError(f"sweep is missing {exc.args[0]!r}") from None
        if sweep.steps < 2:
            raise ValidationError("sweep needs at least 2 steps")
        if sweep.parameter not in sweepable_parameters(protocol):
            raise ValidationError(f"cannot sweep {sweep.parameter!r} for {protocol.value}; "
                                  f"choose from {list(sweepable_parameters(protocol))}")

    cfg = RunConfig(protocol, t_mags, t_phases, tuple(mags), tuple(phases), trials, seed, sweep)
    if validate:
        cfg.inputs()
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    return config_from_dict(doc)


def sweep_point(cfg: RunConfig, value: float) -> RunConfig:
    """Config with ``cfg.sweep.parameter`` set to ``value``.

    Magnitude parameters keep their group normalized by rescaling the other
    magnitudes in the group by a common factor.  Phases are set directly.
    The result is not validated.
    """
    name = cfg.sweep.parameter
    if name in MAGNITUDE_NAMES or name in COEFFICIENT_NAMES:
        is_target = name in MAGNITUDE_NAMES
        group = list(cfg.target_magnitudes if is_target else cfg.channel_magnitudes)
        idx = (MAGNITUDE_NAMES if is_target else COEFFICIENT_NAMES).index(name)
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"{name}={value:.17g} cannot be part of a normalized state")
        rest = math.fsum(m * m for i, m in enumerate(group) if i != idx)
        if rest == 0.0:
            raise ValidationError(f"cannot rescale the others when sweeping {name}: they are all zero")
        scale = math.sqrt((1.0 - value * value) / rest)
        group = [value if i == idx else m * scale for i, m in enumerate(group)]
        if is_target:
            return replace(cfg, target_magnitudes=tuple(group))
        return replace(cfg, channel_magnitudes=tuple(group))
    phases = list(cfg.target_phases)
    phases[PHASE_NAMES[cfg.protocol.phase_count].index(name)] = value
    return replace(cfg, target_phases=tuple(phases))


RENORMALIZATION_POLICY = "other magnitudes in the swept group rescaled proportionally"
