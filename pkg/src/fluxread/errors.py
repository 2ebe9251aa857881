"""Exception types shared across the simulation modules."""


class FluxreadError(Exception):
    """Base class for all package errors."""


class DegenerateCouplingError(FluxreadError):
    """M^2 >= L*Lr: the inductance matrix is singular or unphysical."""


class WellVanished(FluxreadError):
    """No left (shallow) well exists at the requested resonator flux."""

    def __init__(self, phi_r, message=None):
        self.phi_r = phi_r
        super().__init__(message or f"left well vanished at phi_r = {phi_r:.6g}")


class GridTooCoarse(FluxreadError):
    """Grid refinement failed to converge the retained eigenvalues."""


class NotAQubit(FluxreadError):
    """Fewer than two levels in the left well; no 0-1 transition exists."""


class LevelLost(FluxreadError):
    """A tracked level left the well inside the requested flux range."""

    def __init__(self, n, phi_r):
        self.n = n
        self.phi_r = phi_r
        super().__init__(f"level {n} leaves the left well at phi_r = {phi_r:.6g}")


class CurveRangeExceeded(FluxreadError):
    """Resonator flux left the tabulated response-curve range."""

    def __init__(self, phi_r, lo, hi):
        self.phi_r = phi_r
        super().__init__(
            f"phi_r = {phi_r:.6g} left the tabulated range [{lo:.6g}, {hi:.6g}]"
        )


class NearDegeneracy(FluxreadError):
    """A retained level gap fell below the degeneracy guard."""

    def __init__(self, k, m, phi_r, gap):
        self.k = k
        self.m = m
        self.phi_r = phi_r
        self.gap = gap
        super().__init__(
            f"levels {k},{m} gap {gap:.4g} GHz below guard at phi_r = {phi_r:.6g}"
        )


class StepTooCoarse(FluxreadError):
    """Halving the time step changed the result beyond tolerance."""


class NoCrossing(FluxreadError):
    """Parameter search found no fidelity crossing within the allowed window."""
