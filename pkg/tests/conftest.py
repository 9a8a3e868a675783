import math

import numpy as np
import pytest

from permloc.model import DomainSpec, InclusionShape, InclusionSpec, Scenario

DIAM = math.sqrt(2.0)


@pytest.fixture
def unit_domain():
    return DomainSpec(rect=(0.0, 0.0, 1.0, 1.0), T=1.0)


@pytest.fixture
def control_domain():
    # T = 3 x diameter: comfortably above the geometric-control time
    return DomainSpec(rect=(0.0, 0.0, 1.0, 1.0), T=3.0 * DIAM)


def disk_shape(radius=1.0):
    return InclusionShape(kind="disk", params=(radius,))


def single_disk_scenario(domain, center=(0.4, 0.55), alpha=0.05, mu=2.0, c0=0.3):
    inc = InclusionSpec(center=center, alpha=alpha, shape=disk_shape(), mu=mu)
    return Scenario(domain=domain, inclusions=(inc,), c0=c0)


def star_shape(n_verts=12, r_hi=1.0, r_lo=0.65, orientation=0.0):
    th = 2.0 * np.pi * np.arange(n_verts) / n_verts
    r = np.where(np.arange(n_verts) % 2 == 0, r_hi, r_lo)
    verts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    return InclusionShape(kind="smooth-polygon", params=tuple(verts.ravel()),
                          orientation=orientation)
