from src.cli.config import RunConfig, load_config
from src.cli.main import main, run
from src.cli.results import ResultDocument

__all__ = ["RunConfig", "load_config", "main", "run", "ResultDocument"]
