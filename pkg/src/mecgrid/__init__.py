"""Day-ahead MILP planning for multi-carrier hybrid AC/DC microgrids."""

from .model import MicrogridCase, validate_case

__version__ = "0.1.0"

__all__ = ["MicrogridCase", "validate_case", "__version__"]
