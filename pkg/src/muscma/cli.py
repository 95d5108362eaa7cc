"""Command-line scenario runner.

Scenario files are sectioned ``key = value`` text::

    [deployment]
    sites = 7
    users_total = 210

    [scheduler]
    mode = MU-SCMA

Omitted keys take their defaults. ``#`` and ``;`` start comments.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .netsim import ScenarioConfig, run
from .netsim.config import FIELD_TYPES, SECTIONS
from .netsim.metrics import write_log_csv, write_summary_csv

PRESETS = {
    "fullbuffer-wideband": dict(modes=("OFDMA", "SCMA", "MU-SCMA"), scheduler="wideband",
                                resource_utilization=1.0),
    "halfload-subband": dict(modes=("OFDMA", "SCMA"), scheduler="subband",
                             resource_utilization=0.5),
}
SWEEP_PARAMS = ("beta", "utilization", "users_per_cell")
SWEEP_COLUMNS = ("value", "mode", "throughput_mbps", "coverage_kbps")

_SECTION_OF = {key: sec for sec, keys in SECTIONS.items() for key in keys}
_TRUE = ("true", "yes", "on", "1")
_FALSE = ("false", "no", "off", "0")


class ConfigError(ValueError):
    """Invalid scenario file, override or request."""


def _convert(key: str, text: str):
    kind = FIELD_TYPES[key]
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    return text


def _where(path, lineno):
    return f"{path}:{lineno}" if lineno else str(path)


def _apply(values: dict, key: str, text: str, where: str) -> None:
    if key not in FIELD_TYPES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        values[key] = _convert(key, text)
    except ValueError as exc:
        raise ConfigError(f"{where}: {key}: type mismatch, expected {FIELD_TYPES[key]} ({exc})")


def parse_config_text(text: str, source="<string>", base: ScenarioConfig | None = None
                      ) -> ScenarioConfig:
    values = {}
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{_where(source, lineno)}: malformed section header")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{_where(source, lineno)}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{_where(source, lineno)}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        where = _where(source, lineno)
        if section is None:
            raise ConfigError(f"{where}: key {key!r} outside any section")
        if key in FIELD_TYPES and _SECTION_OF[key] != section:
            raise ConfigError(f"{where}: key {key!r} belongs to [{_SECTION_OF[key]}], not [{section}]")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        _apply(values, key, val, where)
        lines[key] = lineno
    try:
        return (base or ScenarioConfig()).replace(**values)
    except ValueError as exc:
        # point at the line of the first key named in the message, if any
        lineno = next((n for k, n in lines.items() if k in str(exc)), None)
        raise ConfigError(f"{_where(source, lineno)}: constraint violated: {exc}")


def parse_config(path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})")
    return parse_config_text(text, path)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def serialize_config(config: ScenarioConfig) -> str:
    """Text that :func:`parse_config_text` maps back to an equal config."""
    out = []
    for sec, keys in SECTIONS.items():
        out.append(f"[{sec}]")
        out.extend(f"{k} = {_format(getattr(config, k))}" for k in keys)
        out.append("")
    return "\n".join(out)


def apply_overrides(config: ScenarioConfig, overrides) -> ScenarioConfig:
    values = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, val = (s.strip() for s in item.split("=", 1))
        _apply(values, key, val, f"override {item!r}")
    try:
        return config.replace(**values)
    except ValueError as exc:
        raise ConfigError(f"override: constraint violated: {exc}")


@dataclass
class RunRequest:
    scenario: str | None = None
    config_path: str | None = None
    seed: int | None = None
    drops: int | None = None
    ttis: int | None = None
    output: str = "results"
    overrides: list = field(default_factory=list)
    workers: int = 1

    def resolve(self) -> tuple[ScenarioConfig, tuple]:
        """Effective base config and the modes to run."""
        config = parse_config(self.config_path) if self.config_path else ScenarioConfig()
        modes = (config.mode,)
        if self.scenario is not None:
            if self.scenario not in PRESETS:
                raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(PRESETS)}")
            preset = dict(PRESETS[self.scenario])
            modes = preset.pop("modes")
            config = config.replace(mode=modes[0], **preset)
        config = apply_overrides(config, self.overrides)
        if self.scenario is not None and config.mode not in modes:
            modes = (config.mode,)
        extra = {k: v for k, v in (("seed", self.seed), ("drops", self.drops), ("ttis", self.ttis))
                 if v is not None}
        try:
            config = config.replace(**extra)
        except ValueError as exc:
            raise ConfigError(str(exc))
        return config, tuple(modes)


def _write_config(config, modes, out: Path):
    text = f"# modes: {', '.join(modes)}\n" + serialize_config(config)
    (out / "effective_config.txt").write_text(text)


def run_scenario(request: RunRequest) -> dict:
    """Run every mode of the request on shared seeds; write summary, log and config.

    Returns ``{mode: RunMetrics}``.
    """
    config, modes = request.resolve()
    out = Path(request.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_config(config, modes, out)
    results = {m: run(config.replace(mode=m), workers=request.workers) for m in modes}
    write_summary_csv(results.items(), out / "summary.csv")
    _write_logs(results, out / "schedule_log.csv")
    return results


def _write_logs(results, path: Path):
    """All modes in one file, mode as the leading column."""
    tmp = path.with_suffix(".part")
    with open(path, "w", newline="") as fh:
        for i, (mode, m) in enumerate(results.items()):
            write_log_csv(m.log, tmp)
            with open(tmp) as part:
                header = part.readline()
                if i == 0:
                    fh.write("mode," + header)
                for line in part:
                    fh.write(f"{mode},{line}")
    tmp.unlink()


def _sweep_field(config: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == "beta":
        return config.replace(beta=value)
    if parameter == "utilization":
        return config.replace(resource_utilization=value)
    return config.replace(users_total=max(1, round(value * config.cells)))


def sweep(request: RunRequest, parameter: str, values) -> list[tuple]:
    """One run per value and mode on the same seeds; writes ``sweep.csv``."""
    if parameter not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMS}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    config, modes = request.resolve()
    out = Path(request.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_config(config, modes, out)
    rows = []
    for v in values:
        try:
            cfg = _sweep_field(config, parameter, v)
        except ValueError as exc:
            raise ConfigError(f"sweep {parameter}={v}: {exc}")
        for mode in modes:
            m = run(cfg.replace(mode=mode), workers=request.workers)
            rows.append((v, mode, m.cell_throughput_mbps, m.coverage_kbps))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for v, mode, tp, cov in rows:
            w.writerow([repr(float(v)), mode, f"{tp:.4f}", f"{cov:.3f}"])
    return rows


def _parse_sweep(text: str):
    if "=" not in text:
        raise ConfigError(f"--sweep {text!r}: expected param=v1,v2,...")
    name, vals = text.split("=", 1)
    items = [s for s in (t.strip() for t in vals.split(",")) if s]
    try:
        return name.strip(), [float(s) for s in items]
    except ValueError:
        raise ConfigError(f"--sweep {text!r}: values must be numbers")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="muscma", description="Run SCMA / MU-SCMA system-level scenarios.")
    p.add_argument("--scenario", choices=sorted(PRESETS), help="named mode comparison")
    p.add_argument("--config", help="scenario file")
    p.add_argument("--seed", type=int)
    p.add_argument("--drops", type=int)
    p.add_argument("--ttis", type=int)
    p.add_argument("--output", default="results", help="output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--sweep", metavar="PARAM=V1,V2,...",
                   help=f"parameter sweep over one of {', '.join(SWEEP_PARAMS)}")
    p.add_argument("--workers", type=int, default=1, help="processes for independent drops")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    req = RunRequest(args.scenario, args.config, args.seed, args.drops, args.ttis, args.output,
                     args.override, max(1, args.workers))
    try:
        if args.sweep is not None:
            name, values = _parse_sweep(args.sweep)
            sweep(req, name, values)
        else:
            run_scenario(req)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
