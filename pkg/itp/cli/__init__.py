from .config import CliConfig, config_schema, find_config, load_config, parse_config
from .main import EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_USAGE, build_parser, main, run_cli
