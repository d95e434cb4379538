"""Command manager for loading and executing lab commands.

This module handles the discovery, loading, and time-limited execution of
the subcommand modules under ``commands/``.
"""

import asyncio
import importlib
import logging
import os
from typing import Any, Dict, List

from commands.base import get_registered_commands

from .config import settings

logger = logging.getLogger(__name__)


class CommandManager:
    """Manages lab commands - loading, registration, and execution.

    Attributes:
        commands: Dictionary of loaded command instances
        commands_dir: Directory path containing command modules
    """

    def __init__(self):
        self.commands: Dict[str, Any] = {}
        self.commands_dir = os.path.join(os.path.dirname(__file__), "..", "commands")

    def load_commands(self) -> None:
        """Import every command module and instantiate the registered commands."""
        logger.debug("Loading commands from %s", self.commands_dir)
        for file_name in sorted(os.listdir(self.commands_dir)):
            if file_name.endswith(".py") and not file_name.startswith("_") and file_name != "base.py":
                module_name = f"commands.{file_name[:-3]}"
                importlib.import_module(module_name)
                logger.debug("Imported module: %s", module_name)

        for command_name, command_class in get_registered_commands().items():
            try:
                instance = command_class()
                self.commands[instance.name] = instance
            except Exception as e:
                logger.error(
                    "Failed to instantiate command %s (%s): %s",
                    command_name,
                    command_class.__name__,
                    str(e)
                )
        logger.debug("Loaded %d commands", len(self.commands))

    async def execute_command(self, command_name: str, parameters: Dict[str, Any]) -> Dict[str, Any]:
        """Execute a command under the COMMAND_TIMEOUT limit.

        Returns:
            The command's response dictionary; timeouts and unexpected
            exceptions become error dictionaries.
        """
        if command_name not in self.commands:
            error_msg = f"Command '{command_name}' not found"
            logger.error(error_msg)
            return {"success": False, "error": error_msg, "response": error_msg}

        command = self.commands[command_name]
        try:
            logger.info("Executing command: %s", command_name)
            logger.debug("Parameters: %s", parameters)
            result = await asyncio.wait_for(
                command.execute(**parameters),
                timeout=settings.COMMAND_TIMEOUT
            )
            if result.get("success"):
                logger.info("Command %s finished", command_name)
            return result

        except asyncio.TimeoutError:
            error_msg = (
                f"Command '{command_name}' timed out after "
                f"{settings.COMMAND_TIMEOUT} seconds"
            )
            logger.error(error_msg)
            return {"success": False, "error": error_msg, "response": error_msg}

        except Exception as e:
            error_msg = f"Error executing command '{command_name}': {str(e)}"
            logger.exception(error_msg)
            return {"success": False, "error": error_msg, "response": error_msg}

    def get_command_definitions(self) -> List[Dict[str, Any]]:
        return [
            {"name": cmd.name, "description": cmd.description, "arguments": cmd.arguments}
            for cmd in self.commands.values()
        ]
