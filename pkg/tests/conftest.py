import sys

import numpy as np
import pytest

from expdyn.material import LinearElastic, StVenantKirchhoff, Yeoh, lame_from_young

LAM, MU = lame_from_young(1.0e4, 0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_materials():
    return [LinearElastic(LAM, MU, 1.0), StVenantKirchhoff(LAM, MU, 1.0),
            Yeoh(100.0, -1.0, 0.01, 0.001, 1.0)]


@pytest.fixture(params=all_materials(), ids=["linear", "svk", "yeoh"])
def material(request):
    return request.param


def random_grad(rng, scale, shape=()):
    return rng.uniform(-scale, scale, size=shape + (3, 3))


def beam_system(material, lengths=(1.0, 0.1, 0.1), divisions=(2, 1, 1), traction=None,
                load_active=False, threads=1):
    """Cantilever system plus its external load vector."""
    from expdyn.assembly import Assembler
    from expdyn.mesh import cantilever
    from expdyn.system import MechanicalSystem

    asm = Assembler(cantilever(lengths, divisions), material, threads)
    P = asm.external_force({"tip": traction}) if traction is not None else None
    return MechanicalSystem(asm, P if load_active else None, load_active), P


def quadratic_velocity(system, amplitude, component=2):
    """Velocity ``amplitude * (X / L)^2`` along one component, free dofs only."""
    asm = system.assembler
    X = asm.mesh.nodes[:, 0]
    full = np.zeros((asm.mesh.n_nodes, 3))
    full[:, component] = amplitude * (X / X.max()) ** 2
    return asm.dofs.restrict(full.ravel())


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS, key=lambda s: int(s.split()[2])):
        terminalreporter.write_line(line)
