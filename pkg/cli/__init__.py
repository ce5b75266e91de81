from .commands import register_commands
