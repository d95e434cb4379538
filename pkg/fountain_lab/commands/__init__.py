"""Lab subcommands registered through the lab_command decorator."""
