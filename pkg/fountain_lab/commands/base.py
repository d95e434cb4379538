"""Base class and decorators for lab commands.

This module provides the core functionality for creating and registering
CLI subcommands with automatic discovery and argument validation.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Type

import numpy as np

logger = logging.getLogger(__name__)

# subcommand name -> command class, filled as command modules are imported
_REGISTERED_COMMANDS: Dict[str, Type['CommandBase']] = {}

ARGUMENT_TYPES = {"string": str, "integer": int, "number": float, "boolean": bool, "grid": str}


def lab_command(name: Optional[str] = None):
    """Register a CommandBase subclass as a subcommand.

    Without ``name`` the subcommand is the lower-cased class name with
    ``command`` removed, so ``SelftestCommand`` becomes ``selftest``.
    Registering a name twice keeps the later class.

    Raises:
        TypeError: If the class is not a CommandBase
    """
    def register(cls: Type['CommandBase']) -> Type['CommandBase']:
        if not (isinstance(cls, type) and issubclass(cls, CommandBase)):
            raise TypeError(f"{getattr(cls, '__name__', cls)!s} must inherit from CommandBase")
        subcommand = name or cls.__name__.lower().replace("command", "")
        _REGISTERED_COMMANDS[subcommand] = cls
        logger.debug("Registered subcommand %s -> %s", subcommand, cls.__name__)
        return cls
    return register


def get_registered_commands() -> Dict[str, Type['CommandBase']]:
    """Snapshot of the registry; mutating it leaves the registry untouched."""
    return dict(_REGISTERED_COMMANDS)


def clear_command_registry() -> Dict[str, Type['CommandBase']]:
    """Empty the registry and return what it held, so callers can put it back."""
    removed = dict(_REGISTERED_COMMANDS)
    _REGISTERED_COMMANDS.clear()
    return removed


def parse_grid(text: str, cast=float) -> List:
    """Parse ``a:b[:step]`` (inclusive) or a comma-separated list.

    Raises:
        ValueError: On an empty or malformed grid
    """
    text = str(text).strip()
    if not text:
        raise ValueError("Empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"Grid '{text}' must look like a:b[:step]")
        start, stop = cast(parts[0]), cast(parts[1])
        step = cast(parts[2]) if len(parts) == 3 else cast(1)
        if step <= 0:
            raise ValueError("Grid step must be positive")
        if cast is int:
            return list(range(start, stop + 1, step))
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [float(start + i * step) for i in range(count)]
    return [cast(v) for v in text.split(",") if v.strip()]


class CommandBase(ABC):
    """Abstract base class for all lab commands.

    Provides common functionality for argument validation, error handling,
    and response formatting. Every subcommand must inherit from this class.

    Attributes:
        name: Subcommand name
        description: One-line help text
        arguments: Schema of subcommand flags (type, help, default, choices)
    """

    def __init__(
        self,
        name: str,
        description: str,
        arguments: Optional[Dict[str, Dict[str, Any]]] = None,
    ):
        self.name = name
        self.description = description
        self.arguments = arguments or {}
        logger.debug("Initialized command: %s", name)

    def add_arguments(self, parser) -> None:
        """Add the subcommand flags to an argparse parser."""
        for arg_name, schema in self.arguments.items():
            flag = "--" + arg_name.replace("_", "-")
            kind = schema.get("type", "string")
            if kind == "boolean":
                parser.add_argument(flag, dest=arg_name, action="store_true", help=schema.get("help"))
                continue
            parser.add_argument(
                flag,
                dest=arg_name,
                type=ARGUMENT_TYPES[kind],
                default=None,
                choices=schema.get("choices"),
                help=schema.get("help"),
            )

    @abstractmethod
    async def execute(self, **kwargs) -> Dict[str, Any]:
        """Run the command.

        Args:
            **kwargs: Validated arguments, plus the global ``config``,
                ``seed`` and ``workers`` values

        Returns:
            Dictionary with keys:
                - success (bool): Whether the command completed
                - result (dict): ``columns``, ``rows`` and provenance ``header``
                - response (str): One-line summary
                - error (str, optional): Diagnostic if the command failed
        """
        ...

    def validate_parameters(self, **kwargs) -> Dict[str, Any]:
        """Apply defaults and coerce argument types.

        Raises:
            ValueError: If a required argument is missing or invalid
        """
        validated = {}

        for param_name, param_schema in self.arguments.items():
            value = kwargs.get(param_name)
            if value is None:
                value = param_schema.get("default")

            if param_schema.get("required", False) and value is None:
                raise ValueError(
                    f"Required argument '--{param_name.replace('_', '-')}' is missing"
                )

            if value is not None:
                validated[param_name] = self._coerce_parameter_type(param_name, value, param_schema)

        for extra in ("config", "seed", "workers"):
            if kwargs.get(extra) is not None:
                validated[extra] = kwargs[extra]
        return validated

    def _coerce_parameter_type(
        self,
        param_name: str,
        value: Any,
        param_schema: Dict[str, Any]
    ) -> Any:
        expected_type = param_schema.get("type", "string")

        if expected_type == "integer" and not isinstance(value, int):
            try:
                return int(value)
            except ValueError:
                raise ValueError(f"Argument '{param_name}' must be an integer")

        if expected_type == "number" and not isinstance(value, (int, float)):
            try:
                return float(value)
            except ValueError:
                raise ValueError(f"Argument '{param_name}' must be a number")

        if expected_type == "boolean" and not isinstance(value, bool):
            if isinstance(value, str):
                return value.lower() in ("true", "1", "yes", "on")
            return bool(value)

        if expected_type == "grid" and isinstance(value, (list, tuple)):
            return ",".join(str(v) for v in value)

        if expected_type == "string" and not isinstance(value, str):
            return str(value)

        if "choices" in param_schema and value not in param_schema["choices"]:
            raise ValueError(f"Argument '{param_name}' must be one of {param_schema['choices']}")

        return value

    def provenance(self, seed: Optional[int], config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Header echoed into every TSV so a run can be repeated from its output.

        ``config`` is stored as given, so a validated config file (which carries
        its own ``seed``) can be written back out and rerun unchanged.
        """
        return {"command": self.name, "seed": seed, "config": dict(config or {})}

    def format_error_response(self, error_message: str) -> Dict[str, Any]:
        return {
            "success": False,
            "error": error_message,
            "response": f"{self.name} failed: {error_message}"
        }

    def format_success_response(
        self,
        columns: Sequence[str],
        rows: Sequence[Sequence[Any]],
        header: Dict[str, Any],
        message: str
    ) -> Dict[str, Any]:
        return {
            "success": True,
            "result": {"columns": list(columns), "rows": [list(r) for r in rows], "header": header},
            "response": message
        }
