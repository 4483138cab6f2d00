"""Command-line surface: configuration, commands and run logging."""

from .config import COMMANDS, RunConfig, load_config
from .commands import COMMAND_RUNNERS
