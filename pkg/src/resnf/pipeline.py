"""Map-level pipelines: Birkhoff normalisation, interpolation, unique normal form.

A jet ``f = mu z + ...`` is first conjugated to a jet ``N`` commuting with
the rotation, then ``mu^{-1} N`` is interpolated by a Hamiltonian ``h`` and
``h`` is brought to its unique normal form.  Parameter families follow the
same route with ``eps`` carried passively.
"""
from __future__ import annotations

from dataclasses import dataclass

from .birkhoff import BirkhoffResult, birkhoff_normalize, conjugate_by_field, reduced_tangent_map
from .family import FamilyNormalFormResult, family_normal_form
from .interpolation import interpolate
from .lie import MapJet, check_area_preserving, hamiltonian_field, time_one_map
from .series import FormalSeries, ResonanceContext
from .unique_nf import NormalFormResult, invariant_deviation, unique_normal_form


@dataclass
class PipelineResult:
    birkhoff: BirkhoffResult
    hamiltonian: FormalSeries
    normal_form: NormalFormResult | FamilyNormalFormResult
    area_residual: object = 0

    def to_json(self):
        out = self.normal_form.to_json()
        out["birkhoff_log"] = [s.to_json() for s in self.birkhoff.log]
        out["interpolating_h"] = self.hamiltonian.to_json()
        out["area_residual_max"] = self.hamiltonian.field.format_real(self.area_residual)
        return out


def hamiltonian_of_map(m: MapJet, ctx: ResonanceContext, tol=None):
    """Birkhoff-normalise ``m`` and interpolate the reduced tangent map.

    Returns
    -------
    (BirkhoffResult, FormalSeries, residual)
        ``residual`` is the max area-preservation residual of the normalised
        jet (zero in exact mode).
    """
    br = birkhoff_normalize(m, ctx, tol)
    res = check_area_preserving(br.jet).max_abs()
    h = interpolate(reduced_tangent_map(br.jet, ctx), tol)
    return br, h, res


def normalize_map(m: MapJet, ctx: ResonanceContext, tol=None) -> PipelineResult:
    """Invariants of the jet ``m`` (single map)."""
    br, h, res = hamiltonian_of_map(m, ctx, tol)
    nf = unique_normal_form(h, ctx, tol)
    return PipelineResult(br, h, nf, res)


def normalize_family_map(m: MapJet, ctx: ResonanceContext, tol=None) -> PipelineResult:
    """Two-index invariants of a family jet ``m`` (powers of ``eps`` in ``m.f``)."""
    br, h, res = hamiltonian_of_map(m, ctx, tol)
    nf = family_normal_form(h, ctx, tol)
    return PipelineResult(br, h, nf, res)


def conjugate_by_hamiltonian(m: MapJet, chi: FormalSeries) -> MapJet:
    """Jet of ``Phi_chi^{-1} o m o Phi_chi`` for a real-valued ``chi``."""
    return conjugate_by_field(m, hamiltonian_field(chi).truncate(m.trunc_total, m.f.trunc_eps))


def invariance_check(m: MapJet, ctx: ResonanceContext, chi: FormalSeries, tol=None):
    """Max deviation of the invariants of ``m`` and of its conjugate by ``Phi_chi``."""
    r1 = normalize_map(m, ctx, tol).normal_form
    m2 = m if chi.is_zero() else conjugate_by_hamiltonian(m, chi)
    r2 = normalize_map(m2, ctx, tol).normal_form
    return invariant_deviation(r1, r2)


def map_from_hamiltonian(h: FormalSeries, mu) -> MapJet:
    """Jet of ``R_alpha o Phi_h``, i.e. ``mu exp(L_h) z``."""
    t = time_one_map(h)
    return MapJet(t.f.scale(mu))


__all__ = [
    "PipelineResult",
    "conjugate_by_hamiltonian",
    "hamiltonian_of_map",
    "invariance_check",
    "map_from_hamiltonian",
    "normalize_family_map",
    "normalize_map",
]
