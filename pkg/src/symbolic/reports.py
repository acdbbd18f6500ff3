"""
JSON payloads of the ``analyze`` and ``lift`` commands.
"""
from typing import Dict
from typing import List
from typing import Optional

from .admissibility import AdmissibilityMessages
from .dsl import SystemSpec
from .dsl import render_system
from .lie import LieBasis
from .lie import hormander_rank
from .lifting import LiftedSystem
from .volume import VolumeProfile
from .volume import doubling_ratio


def system_summary(spec: SystemSpec) -> dict:
    return {
        "n": spec.n,
        "m": spec.m,
        "q": spec.q,
        "sigma": list(spec.sigma),
        "drift": spec.drift is not None,
        "fields": {name: f.render() for name, f in zip(spec.names, spec.fields)},
        "source": render_system(spec),
    }


def basis_summary(basis: LieBasis) -> dict:
    return {
        "N": basis.N,
        "p": basis.p,
        "step": basis.step,
        "elements": [
            {"index": index.to_list(), "weight": index.weight, "field": f.render()}
            for index, f in basis.elements
        ],
    }


def f_table(profile: VolumeProfile) -> List[dict]:
    """f_k as a sum of |det| terms, one entry per degree k."""
    return [
        {
            "k": k,
            "f_k": " + ".join(f"|{t.determinant.render()}|" for t in terms),
            "terms": len(terms),
        }
        for k, terms in profile.terms.items()
    ]


def analyze_report(
    spec: SystemSpec,
    messages: AdmissibilityMessages,
    basis: Optional[LieBasis],
    profile: Optional[VolumeProfile],
) -> dict:
    payload = {
        "system": system_summary(spec),
        "admissibility": {
            "admissible": not messages.has_error(),
            "messages": messages.to_list(),
        },
    }
    if basis is not None:
        origin = [0] * spec.n
        payload["basis"] = basis_summary(basis)
        payload["N"] = basis.N
        payload["rank_at_origin"] = hormander_rank(spec, basis, origin)
    if profile is not None:
        payload["volume"] = {
            **profile.to_dict(),
            "table": f_table(profile),
            "doubling_at_origin": str(doubling_ratio(profile, [0] * spec.n, 1)),
        }
    payload["q"] = spec.q
    return payload


def group_law_text(lift: LiftedSystem) -> str:
    """
    One line per coordinate, the right operand written with the primed
    coordinate names of the pair context.
    """
    right = lift.pair_context.names[lift.N :]
    left = ", ".join(lift.context.names)
    lines = [f"({left}) * ({', '.join(right)}) = ("]
    for name, p in zip(lift.context.names, lift.law):
        lines.append(f"  {name}: {p.render()},")
    lines.append(")")
    return "\n".join(lines)


def lift_report(lift: LiftedSystem, checks: Dict[str, bool]) -> dict:
    return {
        "system": system_summary(lift.spec),
        "lift": lift.to_dict(),
        "group_law_text": group_law_text(lift),
        "checks": dict(checks),
    }
