"""Simulation configuration, canonical fingerprints, and config files."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

RATIO_NAMES = ("reserve", "liquidity", "leverage", "car", "large_exposure")
MANDATORY_RATIOS = frozenset({"reserve", "liquidity"})
TWO_RATIOS = frozenset(MANDATORY_RATIOS)
ALL_RATIOS = frozenset(RATIO_NAMES)

DEFAULT_ETA = 1e-6
DEFAULT_DAYS = 60
DEFAULT_REALIZATIONS = 100
DEFAULT_TRUST_FRACTION = 0.2


class ConfigError(ValueError):
    """Invalid configuration value or config file."""


def parse_ratio_set(text: str) -> frozenset[str]:
    """Parse a comma-separated ratio list; hyphens and underscores both work."""
    names = frozenset(
        part.strip().replace("-", "_") for part in text.split(",") if part.strip()
    )
    unknown = names - ALL_RATIOS
    if unknown:
        raise ConfigError(f"unknown ratio name(s): {', '.join(sorted(unknown))}")
    return names


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a run besides the bank data.

    The reserve and liquidity ratios cannot be switched off; the channel
    toggles and the remaining ratios are first-class because every
    experiment is an ablation over them.
    """

    sigma: float = 0.0
    eta: float = DEFAULT_ETA
    days: int = DEFAULT_DAYS
    realizations: int = DEFAULT_REALIZATIONS
    seed: int = 0
    interbank: bool = True
    securities_market: bool = True
    trust_effect: bool = True
    trust_fraction: float = DEFAULT_TRUST_FRACTION
    ratios: frozenset[str] = field(default_factory=lambda: TWO_RATIOS)

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.eta < 0:
            raise ConfigError(f"eta must be >= 0, got {self.eta}")
        if self.days < 1:
            raise ConfigError(f"days must be >= 1, got {self.days}")
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")
        if not 0.0 <= self.trust_fraction <= 1.0:
            raise ConfigError(f"trust-fraction must be in [0, 1], got {self.trust_fraction}")
        object.__setattr__(self, "ratios", frozenset(self.ratios))
        unknown = self.ratios - ALL_RATIOS
        if unknown:
            raise ConfigError(f"unknown ratio name(s): {', '.join(sorted(unknown))}")
        missing = MANDATORY_RATIOS - self.ratios
        if missing:
            raise ConfigError(
                f"the {' and '.join(sorted(missing))} ratio(s) cannot be disabled"
            )

    def ratio_names(self) -> list[str]:
        """Active ratios in canonical order."""
        return [name for name in RATIO_NAMES if name in self.ratios]

    def fingerprint(self) -> str:
        """Canonical, filename-safe identifier of the configuration template.

        Excludes sigma: a sweep varies sigma along one curve and records it
        in its own column.
        """
        return "_".join(
            [
                f"eta{self.eta:g}",
                f"T{self.days}",
                "ib-on" if self.interbank else "ib-off",
                "sec-on" if self.securities_market else "sec-off",
                "trust-on" if self.trust_effect else "trust-off",
                f"tf{self.trust_fraction:g}",
                "ratios-" + "+".join(self.ratio_names()),
                f"seed{self.seed}",
                f"n{self.realizations}",
            ]
        )

    def describe(self) -> str:
        """Full effective configuration as 'key=value' pairs, one line."""
        return " ".join(
            [
                f"sigma={self.sigma:g}",
                f"eta={self.eta:g}",
                f"days={self.days}",
                f"realizations={self.realizations}",
                f"seed={self.seed}",
                f"interbank={'on' if self.interbank else 'off'}",
                f"securities={'on' if self.securities_market else 'off'}",
                f"trust={'on' if self.trust_effect else 'off'}",
                f"trust-fraction={self.trust_fraction:g}",
                "ratios=" + ",".join(self.ratio_names()),
            ]
        )

    def with_sigma(self, sigma: float) -> SimConfig:
        return replace(self, sigma=sigma)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read 'key = value' lines; keys are exactly the CLI flag names.

    Blank lines and '#' comments are skipped. Returns raw string values;
    the CLI layer applies types and lets explicit flags override.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key] = value.strip()
    return values
