import numpy as np
import pytest

from ramanmem import CESIUM_D1, ControlField, find_at_resonances, scan_spectrum


@pytest.fixture(scope="session")
def atom():
    return CESIUM_D1


@pytest.fixture(scope="session")
def raman_control(atom):
    """Control tuned between the excited hyperfine levels (delta = +50, rabi = 15)."""
    return ControlField.for_atom(atom, 50.0, 15.0)


@pytest.fixture(scope="session")
def at_peak(atom, raman_control):
    grid = np.linspace(40.0, 60.0, 4001)
    peaks = find_at_resonances(scan_spectrum(atom, raman_control, grid))
    return min(peaks, key=lambda r: abs(r.center - 50.0)).center


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one part of an acceptance criterion: criterion(n, part, ok, detail)."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(n: int, part: str, ok: bool, detail: str) -> None:
        store.setdefault(n, []).append((part, bool(ok), detail))
        print(f"CRITERION {n} [{part}]: {'PASS' if ok else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(store):
        parts = store[n]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p[0]}: {'ok' if p[1] else 'FAIL'} ({p[2]})" for p in parts)
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
