from meshdqn.config.run_config import RunConfig, dump_run_config, load_run_config
from meshdqn.config.settings import Settings, settings

__all__ = ["RunConfig", "Settings", "dump_run_config", "load_run_config", "settings"]
