"""Shared models and problems for the test suite."""
from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from levyliq.levy_model import Erlang2, Exponential, LevyModel
from levyliq.liquidation import BarrierSystem, LiquidationProblem

settings.register_profile("levyliq", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("levyliq")


def single_model() -> LevyModel:
    """c0 = 5, sigma0 = 0.5, lambda0 = 2 claims of law Erlang(2, alpha = 2)."""
    return LevyModel(5.0, 0.5, 2.0, Erlang2(2.0))


def solvent_model() -> LevyModel:
    """p - alpha = 10 - 2, sigma = 2, claims 3 x Erlang(2, 2), dividends 2 x Exp(1)."""
    return LevyModel.from_components(8.0, 2.0, [(3.0, Erlang2(2.0)), (2.0, Exponential(1.0))])


def insolvent_model() -> LevyModel:
    """p~ = 6, sigma~ = 1.5, claims 3 x Erlang(2, 2)."""
    return LevyModel(6.0, 1.5, 3.0, Erlang2(2.0))


def joint_problem(q: float = 0.0, x: float = 2.0, lam: float = 0.1) -> LiquidationProblem:
    """Two-regime problem with barriers (0, 1, 2); defaults are the joint-law study."""
    return LiquidationProblem(solvent_model(), insolvent_model(), BarrierSystem(0.0, 1.0, 2.0),
                              lam, q, x)


def base_problem() -> LiquidationProblem:
    """Two-regime base point of the parameter sweeps: x = 5, lambda = 0.2."""
    return joint_problem(x=5.0, lam=0.2)


ALL_MODELS = {"single": single_model, "solvent": solvent_model, "insolvent": insolvent_model}


@pytest.fixture
def single():
    return single_model()


@pytest.fixture
def solvent():
    return solvent_model()


@pytest.fixture
def insolvent():
    return insolvent_model()


@pytest.fixture
def problem53():
    return joint_problem()


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one ``PASS``/``FAIL`` line for an acceptance criterion."""
    def emit(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
