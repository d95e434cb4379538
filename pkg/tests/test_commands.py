"""
Tests for the command layer: registry, argument handling and subcommands.
"""

import asyncio
import json
import os
import sys
from unittest.mock import patch

import pytest

# Add the package directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'fountain_lab'))

from analysis.failure_bounds import lrfc_exact
from commands.base import (
    CommandBase,
    clear_command_registry,
    get_registered_commands,
    lab_command,
    parse_grid,
)
from core.command_manager import CommandManager

LAB_COMMANDS = {"analyze", "bounds", "decode", "design", "encode", "selftest", "simulate", "spectra"}


def _manager():
    manager = CommandManager()
    manager.load_commands()
    return manager


@pytest.fixture
def empty_registry():
    """Run a test against an empty command registry, then restore the real one."""
    saved = clear_command_registry()
    yield
    clear_command_registry()
    for name, cls in saved.items():
        lab_command(name)(cls)


class _ToyCommand(CommandBase):
    def __init__(self):
        super().__init__(
            name="toy",
            description="Toy command",
            arguments={
                "n_c": {"type": "integer", "required": True},
                "eps": {"type": "number", "default": 0.1},
                "kind": {"type": "string", "default": "lrfc", "choices": ["lrfc", "lt"]},
                "grid": {"type": "grid"},
            },
        )

    async def execute(self, **kwargs):
        return self.format_success_response(["a"], [[1]], self.provenance(0), "ok")


class TestParseGrid:
    """Test grid parsing."""

    def test_inclusive_int_range(self):
        """Test a:b over integers."""
        assert parse_grid("0:10", int) == list(range(11))

    def test_float_range_with_step(self):
        """Test a:b:step over floats without losing the endpoint."""
        grid = parse_grid("0.05:0.5:0.05")
        assert len(grid) == 10
        assert grid[-1] == pytest.approx(0.5)

    def test_list(self):
        """Test comma-separated values."""
        assert parse_grid("1,3, 5") == [1.0, 3.0, 5.0]

    @pytest.mark.parametrize("text,message", [("", "Empty grid"), ("1:2:0", "step must be positive"), ("1:2:3:4", "a:b")])
    def test_malformed(self, text, message):
        """Test rejected grids."""
        with pytest.raises(ValueError, match=message):
            parse_grid(text)


class TestCommandBase:
    """Test argument validation."""

    def test_defaults_and_coercion(self):
        """Test that defaults fill in and strings are coerced."""
        params = _ToyCommand().validate_parameters(n_c="12", grid=[1, 2], seed=4)
        assert params == {"n_c": 12, "eps": 0.1, "kind": "lrfc", "grid": "1,2", "seed": 4}

    def test_missing_required(self):
        """Test the required-argument check."""
        with pytest.raises(ValueError, match="Required argument '--n-c' is missing"):
            _ToyCommand().validate_parameters(eps=0.2)

    def test_bad_choice(self):
        """Test the choices check."""
        with pytest.raises(ValueError, match="must be one of"):
            _ToyCommand().validate_parameters(n_c=3, kind="turbo")

    def test_bad_integer(self):
        """Test integer coercion errors."""
        with pytest.raises(ValueError, match="must be an integer"):
            _ToyCommand().validate_parameters(n_c="many")

    def test_provenance_keeps_config_seed(self):
        """Test that a config carrying its own seed is echoed unchanged."""
        header = _ToyCommand().provenance(3, {"seed": 3, "k": 4})
        assert header == {"command": "toy", "seed": 3, "config": {"seed": 3, "k": 4}}

    def test_decorator_requires_base(self):
        """Test that only CommandBase subclasses register."""
        with pytest.raises(TypeError, match="must inherit from CommandBase"):
            lab_command("broken")(object)


@pytest.mark.usefixtures("empty_registry")
class TestRegistry:
    """Test the registration decorator against an empty registry."""

    def test_name_derived_from_class(self):
        """Test that the class name minus 'command' becomes the subcommand."""
        @lab_command()
        class EchoCommand(_ToyCommand):
            pass

        assert get_registered_commands() == {"echo": EchoCommand}

    def test_snapshot_is_a_copy(self):
        """Test that editing the returned mapping leaves the registry alone."""
        lab_command("toy")(_ToyCommand)
        snapshot = get_registered_commands()
        snapshot.clear()
        assert set(get_registered_commands()) == {"toy"}

    def test_clear_returns_removed_entries(self):
        """Test that clearing hands back what was registered."""
        lab_command("toy")(_ToyCommand)
        assert clear_command_registry() == {"toy": _ToyCommand}
        assert get_registered_commands() == {}


class TestCommandManager:
    """Test discovery and execution."""

    def test_discovers_every_command(self):
        """Test that all subcommand modules are found."""
        manager = _manager()
        assert LAB_COMMANDS <= set(manager.commands)
        assert LAB_COMMANDS <= set(get_registered_commands())

    def test_definitions(self):
        """Test command definitions for help output."""
        definitions = {d["name"]: d for d in _manager().get_command_definitions()}
        assert "kind" in definitions["bounds"]["arguments"]

    @pytest.mark.asyncio
    async def test_unknown_command(self):
        """Test that an unknown name is an error, not an exception."""
        result = await CommandManager().execute_command("transmogrify", {})
        assert not result["success"]
        assert "not found" in result["error"]

    @pytest.mark.asyncio
    async def test_timeout(self):
        """Test the COMMAND_TIMEOUT limit."""
        class SlowCommand(CommandBase):
            def __init__(self):
                super().__init__(name="slow", description="Slow command")

            async def execute(self, **kwargs):
                await asyncio.sleep(2)
                return {"success": True}

        manager = CommandManager()
        manager.commands["slow"] = SlowCommand()
        with patch('core.command_manager.settings.COMMAND_TIMEOUT', 0.1):
            result = await manager.execute_command("slow", {})
        assert "timed out" in result["error"].lower()


@pytest.mark.asyncio
class TestSubcommands:
    """Test subcommands end to end without the CLI."""

    async def test_lrfc_bounds(self):
        """Test the LRFC bracket table."""
        result = await _manager().commands["bounds"].execute(kind="lrfc", k=4, delta_grid="0:3")
        assert result["success"]
        table = result["result"]
        assert table["columns"] == ["delta", "lower", "upper", "exact"]
        assert table["rows"][0] == [0, 0.5, 1.0, lrfc_exact(2, 4, 0)]
        assert table["header"]["seed"] == 0

    async def test_block_bounds_need_length(self):
        """Test that block bounds require --n."""
        result = await _manager().commands["bounds"].execute(kind="block", k=5)
        assert not result["success"]
        assert "--n" in result["error"]

    async def test_multicast_header(self):
        """Test that multicast runs report the required overheads."""
        result = await _manager().commands["bounds"].execute(kind="multicast", k=10, eps=0.01, delta_grid="0:5")
        header = result["result"]["header"]
        assert abs(header["min_overhead_lrfc"] - 27) <= 2
        assert abs(header["min_overhead_concat"] - 20) <= 2

    async def test_hamming_spectrum(self):
        """Test the exact Hamming enumerator table."""
        result = await _manager().commands["spectra"].execute(kind="hamming", t=3)
        assert [row[1] for row in result["result"]["rows"]] == [1, 0, 0, 7, 7, 0, 0, 1]

    async def test_linear_random_spectrum_needs_h(self):
        """Test the required code length."""
        result = await _manager().commands["spectra"].execute(kind="linear-random", k=8)
        assert not result["success"]
        assert "--h" in result["error"]

    async def test_analyze_from_flags(self):
        """Test a DP and binomial analysis from flags."""
        result = await _manager().commands["analyze"].execute(k=40, m_grid="40:44:2", dp=True, binomial=True)
        table = result["result"]
        assert table["columns"] == ["m", "delta", "dp_mean", "binomial_mean"]
        assert [row[0] for row in table["rows"]] == [40, 42, 44]

    async def test_analyze_needs_inputs(self):
        """Test that analyze needs a config or k and a grid."""
        result = await _manager().commands["analyze"].execute(k=20)
        assert not result["success"]

    async def test_selftest(self):
        """Test that every built-in check passes."""
        result = await _manager().commands["selftest"].execute()
        assert result["success"]
        assert all(row[1] == 1 for row in result["result"]["rows"])

    async def test_simulate_from_config(self, tmp_path):
        """Test a small Monte Carlo plan and the seed override."""
        path = tmp_path / "plan.json"
        path.write_text(json.dumps({
            "version": 1, "code": {"kind": "lrfc", "k": 6}, "grid": [0, 4],
            "max_trials": 20, "batch_size": 10, "seed": 1,
        }))
        result = await _manager().commands["simulate"].execute(config=str(path), seed=9)
        table = result["result"]
        assert table["header"]["seed"] == 9
        assert [row[1] for row in table["rows"]] == [20, 20]

    async def test_design_needs_config(self):
        """Test that design refuses to run without a spec."""
        result = await _manager().commands["design"].execute()
        assert not result["success"]
        assert "--config" in result["error"]

    async def test_infeasible_design(self, tmp_path):
        """Test that an unreachable target is reported as a failure."""
        path = tmp_path / "design.json"
        path.write_text(json.dumps({
            "version": 1, "k": 20, "target_pf": 1e-12, "dmax": 6, "sweeps": 1, "seed": 0,
        }))
        result = await _manager().commands["design"].execute(config=str(path))
        assert not result["success"]
        assert "No feasible design" in result["error"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
