"""
Run configuration.

Configuration files are INI text ([section] headers, key = value lines,
'#' comments, UTF-8).  Every section is validated by a pydantic model that
rejects unknown keys, so a typo aborts the run before any computation.
Command-line flags are merged on top of the file values.

Example::

    [geometry]
    n_t = 16
    n_x = 8
    n_y = 8
    n_z = 8
    a = 1.0

    [datum]
    group = u1
    kind = single_mode
    mode = 1, 0, 0
    amplitude = 0.05
    polarization = 2
"""

import configparser
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .lie import GroupKind


def _split(value: Any) -> Any:
    """Accept 'a, b, c' strings for list-valued keys."""
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",")]
        return [item for item in items if item]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class GeometrySection(_Section):
    n_t: int = Field(16, ge=4)
    n_x: int = Field(8, ge=4)
    n_y: int = Field(8, ge=4)
    n_z: int = Field(8, ge=4)
    a: float = Field(1.0, gt=0)


class DatumSection(_Section):
    group: Literal["u1", "su2"] = "u1"
    kind: Literal["flat", "single_mode", "localized_bump", "random_small", "file"] = "single_mode"
    mode: Tuple[int, int, int] = (1, 0, 0)
    amplitude: float = Field(0.05, ge=0)
    polarization: int = Field(2, ge=1, le=3)
    center: Optional[Tuple[float, float, float]] = None
    width: float = Field(1.5, gt=0)
    seed: int = 0
    path: Optional[str] = None

    @field_validator("mode", "center", mode="before")
    @classmethod
    def _tuple(cls, value):
        value = _split(value)
        return None if value == [] else value


class MinimizerSection(_Section):
    max_iters: int = Field(5000, ge=0)
    grad_tol: float = Field(1e-9, gt=0)
    initial_step: float = Field(0.1, gt=0)
    backtrack_factor: float = Field(0.5, gt=0, lt=1)
    armijo_constant: float = Field(1e-4, gt=0, lt=1)
    weyl_gauge: bool = True
    seed: int = 0
    start_profile: Literal["constant", "damped"] = "damped"
    method: Literal["cg", "gd"] = "cg"
    max_backtracks: int = Field(30, ge=1)
    n_starts: int = Field(1, ge=1)


class QMSection(_Section):
    lam: float = Field(1.0, gt=0, alias="lambda")
    h: float = Field(1e-3, gt=0)
    half_width: float = Field(5.0, gt=0)
    fd_order: Literal[2, 4] = 4
    closed_form: bool = False
    convergence_hs: List[float] = []

    @field_validator("convergence_hs", mode="before")
    @classmethod
    def _list(cls, value):
        return _split(value)


class MaxwellSection(_Section):
    n: int = Field(24, ge=4)
    a: float = Field(1.0, gt=0)
    field: Literal["localized", "gradient", "single_mode", "file"] = "localized"
    width: float = Field(3.0, gt=0)
    amplitude: float = 1.0
    seeds: List[int] = [0]
    mode: Tuple[int, int, int] = (1, 0, 0)
    polarization: int = Field(2, ge=1, le=3)
    path: Optional[str] = None
    kernel: bool = True
    boost_axes: List[int] = [0, 1, 2]
    oracle_n_t: Optional[int] = Field(None, ge=2)
    kernel_tolerance: float = Field(0.05, gt=0)
    boost_tolerance: float = Field(0.02, gt=0)

    @field_validator("mode", "boost_axes", "seeds", mode="before")
    @classmethod
    def _list(cls, value):
        return _split(value)


class SuiteSection(_Section):
    battery: List[str] = ["gauge", "symmetry", "gauss", "hje", "deriv"]
    symmetries: List[str] = ["rot90:1,2", "shift:1,0,0"]
    corrupt: bool = False
    seed: int = 0

    @field_validator("battery", mode="before")
    @classmethod
    def _list(cls, value):
        return _split(value)

    @field_validator("symmetries", mode="before")
    @classmethod
    def _ops(cls, value):
        # ops contain commas themselves, so entries are separated by ';'
        if isinstance(value, str):
            return [item.strip() for item in value.split(";") if item.strip()]
        return value


class OutputSection(_Section):
    dir: str = "outputs"
    timestamp: bool = True


class RunConfig(_Section):
    """All sections of a run; missing sections take their defaults."""
    geometry: GeometrySection = GeometrySection()
    datum: DatumSection = DatumSection()
    minimizer: MinimizerSection = MinimizerSection()
    qm: QMSection = QMSection()
    maxwell: MaxwellSection = MaxwellSection()
    suite: SuiteSection = SuiteSection()
    output: OutputSection = OutputSection()

    @classmethod
    def from_mapping(cls, data: Dict[str, Dict[str, Any]]) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as err:
            raise ConfigError(_describe(err)) from None

    def merged(self, overrides: Dict[str, Dict[str, Any]]) -> "RunConfig":
        """Copy with non-None override values applied and revalidated."""
        data = self.model_dump(by_alias=True)
        for section, values in overrides.items():
            if section not in data:
                raise ConfigError(f"unknown section [{section}]")
            data[section].update({k: v for k, v in values.items() if v is not None})
        return RunConfig.from_mapping(data)

    # -- conversions into library types --------------------------------------

    def lattice_geometry(self):
        from ..lattice.geometry import LatticeGeometry
        g = self.geometry
        return LatticeGeometry(g.n_t, g.n_x, g.n_y, g.n_z, g.a)

    @property
    def group(self) -> GroupKind:
        return GroupKind.parse(self.datum.group)

    def datum_spec(self):
        from ..lattice.data import DatumSpec
        d = self.datum
        return DatumSpec(kind=d.kind, mode=tuple(d.mode), amplitude=d.amplitude,
                         polarization=d.polarization,
                         center=None if d.center is None else tuple(d.center),
                         width=d.width, seed=d.seed, path=d.path)

    def minimizer_config(self):
        from ..yangmills.minimizer import MinimizerConfig
        values = self.minimizer.model_dump()
        values.pop("n_starts")
        return MinimizerConfig(**values)

    def suite_config(self, threads: int = 1):
        from ..verification.suite import SuiteConfig, SymmetryOp
        return SuiteConfig(
            geometry=self.lattice_geometry(),
            group=self.group,
            datum=self.datum_spec(),
            minimizer=self.minimizer_config(),
            battery=tuple(self.suite.battery),
            symmetries=tuple(SymmetryOp.parse(s) for s in self.suite.symmetries),
            seed=self.suite.seed,
            threads=threads,
            corrupt=self.suite.corrupt,
        )


def _describe(err: ValidationError) -> str:
    parts = []
    for item in err.errors():
        location = ".".join(str(p) for p in item["loc"])
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def load_config(path: Union[str, Path, None]) -> RunConfig:
    """
    Parse and validate an INI configuration file.

    Args:
        path: File path, or None for the defaults

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: unreadable file, unknown section or key, bad value
    """
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    known = set(RunConfig.model_fields)
    data = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}] in {path}")
        data[section] = dict(parser.items(section))
    return RunConfig.from_mapping(data)
