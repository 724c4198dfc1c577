"""
Handler layer for srmkit.
Command handlers that back the CLI subcommands.
"""

from handlers.command_handlers import CommandHandlers

__all__ = [
    'CommandHandlers'
]
