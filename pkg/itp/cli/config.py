"""``itp.yaml``: where the command line finds keys, components, profiles and state."""
import logging
import os
import pathlib
from dataclasses import dataclass, replace
from typing import Mapping, Optional

import strictyaml as sy
from strictyaml.ruamel.error import YAMLError

from itp.errors import ConfigError
from itp.routing import TransportKind

logger = logging.getLogger(__name__)

CONFIG_ENV = "ITP_CONFIG"
DEFAULT_CONFIG = "itp.yaml"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def config_schema() -> sy.Map:
    """
    Generates the strictyaml schema of ``itp.yaml``

    Returns
    -------
        Schema object
    """
    return sy.Map({
        sy.Optional('registry'): sy.Str(),
        sy.Optional('keystore'): sy.Str(),
        sy.Optional('profiles'): sy.Str(),
        sy.Optional('replay_log'): sy.Str(),
        sy.Optional('audit_log'): sy.Str(),
        sy.Optional('transport', default=TransportKind.FILE.value): sy.Enum([kind.value for kind in TransportKind]),
        sy.Optional('state_dir', default="state"): sy.Str(),
        sy.Optional('publication_dir'): sy.Str(),
        sy.Optional('certificate_db'): sy.Str(),
        sy.Optional('log_level', default="INFO"): sy.Enum(list(LOG_LEVELS)),
    })


@dataclass(frozen=True)
class CliConfig:
    """Resolved configuration; every path is absolute or None."""
    registry: Optional[pathlib.Path] = None
    keystore: Optional[pathlib.Path] = None
    profiles: Optional[pathlib.Path] = None
    replay_log: Optional[pathlib.Path] = None
    audit_log: Optional[pathlib.Path] = None
    transport: TransportKind = TransportKind.FILE
    state_dir: pathlib.Path = pathlib.Path("state")
    publication_dir: Optional[pathlib.Path] = None
    certificate_db: Optional[pathlib.Path] = None
    log_level: str = "INFO"
    source: Optional[pathlib.Path] = None

    @property
    def publication(self) -> pathlib.Path:
        return self.publication_dir or self.state_dir / "publication"

    @property
    def certificates(self) -> pathlib.Path:
        return self.certificate_db or self.state_dir

    @property
    def outbox(self) -> pathlib.Path:
        return self.state_dir / "outbox.log"

    def with_overrides(self, **paths) -> "CliConfig":
        """Command-line path overrides; None leaves a setting alone."""
        given = {key: pathlib.Path(value).resolve() for key, value in paths.items() if value is not None}
        return replace(self, **given) if given else self


def _resolve(base: pathlib.Path, value: Optional[str]) -> Optional[pathlib.Path]:
    if value is None:
        return None
    path = pathlib.Path(value).expanduser()
    return path if path.is_absolute() else (base / path).resolve()


def parse_config(text: str, base: pathlib.Path, source: Optional[pathlib.Path] = None) -> CliConfig:
    try:
        data = sy.load(text, config_schema()).data
    except YAMLError as err:
        raise ConfigError(f"{source or 'configuration'}: {err}") from err
    state_dir = _resolve(base, data.get('state_dir', "state"))
    return CliConfig(registry=_resolve(base, data.get('registry')),
                     keystore=_resolve(base, data.get('keystore')),
                     profiles=_resolve(base, data.get('profiles')),
                     replay_log=_resolve(base, data.get('replay_log')),
                     audit_log=_resolve(base, data.get('audit_log')),
                     transport=TransportKind(data.get('transport', TransportKind.FILE.value)),
                     state_dir=state_dir,
                     publication_dir=_resolve(base, data.get('publication_dir')),
                     certificate_db=_resolve(base, data.get('certificate_db')),
                     log_level=data.get('log_level', "INFO"),
                     source=source)


def find_config(explicit: Optional[str] = None, environ: Mapping[str, str] = os.environ,
                cwd: Optional[pathlib.Path] = None) -> Optional[pathlib.Path]:
    """``--config``, else ``$ITP_CONFIG``, else ``./itp.yaml`` when present."""
    if explicit:
        return pathlib.Path(explicit)
    if environ.get(CONFIG_ENV):
        return pathlib.Path(environ[CONFIG_ENV])
    candidate = (cwd or pathlib.Path.cwd()) / DEFAULT_CONFIG
    return candidate if candidate.is_file() else None


def load_config(explicit: Optional[str] = None, environ: Mapping[str, str] = os.environ,
                cwd: Optional[pathlib.Path] = None) -> CliConfig:
    path = find_config(explicit, environ, cwd)
    if path is None:
        logger.debug("no configuration file, using defaults")
        return CliConfig(state_dir=((cwd or pathlib.Path.cwd()) / "state").resolve())
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read configuration {path}: {err}") from err
    path = path.resolve()
    logger.debug("configuration from %s", path)
    return parse_config(text, path.parent, source=path)
