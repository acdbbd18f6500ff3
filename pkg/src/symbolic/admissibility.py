import logging
from dataclasses import dataclass
from typing import Iterator
from typing import List

from .dsl import SystemSpec
from .dsl import fields_independent
from .dsl import validate_homogeneity
from .lie import LieBasis
from .lie import hormander_rank
from .lie import lie_basis
from .lie import random_rational_points

logger = logging.getLogger("hormander.admissibility")

MAX_LIFT_STEP = 6


@dataclass(frozen=True)
class Finding:
    level: int
    check: str
    message: str

    def to_dict(self) -> dict:
        return {
            "level": logging.getLevelName(self.level).lower(),
            "check": self.check,
            "message": self.message,
        }


class AdmissibilityMessages:
    """
    Findings of ``check_admissible``, each tagged with the check that raised
    it (homogeneity, independence, rank, size, lift, drift). Errors make the
    system inadmissible; warnings only limit what can be done with it.
    """

    def __init__(self, label: str = "system"):
        self.label = label
        self.findings: List[Finding] = []

    def add(self, level: int, check: str, message: str):
        self.findings.append(Finding(level, check, message))

    def error(self, check: str, message: str):
        self.add(logging.ERROR, check, message)

    def warning(self, check: str, message: str):
        self.add(logging.WARNING, check, message)

    def info(self, check: str, message: str):
        self.add(logging.INFO, check, message)

    def failed_checks(self) -> List[str]:
        return sorted({f.check for f in self.findings if f.level >= logging.ERROR})

    def log_messages(self):
        if not self.findings:
            logger.info(f"{self.label}: admissible, no issues found")
        for finding in self.findings:
            logger.log(
                finding.level,
                f"{self.label} [{finding.check}] {finding.message}",
            )

    def __len__(self):
        return len(self.findings)

    def __iter__(self) -> Iterator[Finding]:
        return iter(self.findings)

    def has_error(self) -> bool:
        return bool(self.failed_checks())

    def has_warning(self) -> bool:
        return any(f.level == logging.WARNING for f in self.findings)

    def to_list(self) -> List[dict]:
        return [f.to_dict() for f in self.findings]


def check_admissible(spec: SystemSpec, samples: int = 5, seed: int = 0):
    """
    Checks homogeneity and independence of the fields, the Hörmander rank at
    0 and at random rational points, and the size conditions the lifting
    needs. Returns the messages and the Lie basis, which is None when
    homogeneity already failed.
    """
    messages = AdmissibilityMessages(f"n={spec.n} σ={list(spec.sigma)}")

    report = validate_homogeneity(spec)
    for violation in report.violations:
        messages.error("homogeneity", violation)
    if not report.ok:
        return messages, None

    if not fields_independent(list(spec.fields)):
        messages.error("independence", "The fields X1..Xm are linearly dependent.")

    basis: LieBasis = lie_basis(spec)

    rank = hormander_rank(spec, basis, [0] * spec.n)
    if rank != spec.n:
        messages.error("rank", f"Hörmander rank at 0 is {rank}, expected {spec.n}.")
    else:
        for point in random_rational_points(spec.n, samples, seed=seed):
            rank = hormander_rank(spec, basis, point)
            if rank != spec.n:
                messages.error(
                    "rank",
                    f"Hörmander rank at {[str(v) for v in point]} is {rank}, "
                    f"expected {spec.n}.",
                )
                break

    if spec.n < 2:
        messages.warning("size", f"Dimension n={spec.n} is below 2.")
    if basis.N <= spec.n:
        messages.warning(
            "lift",
            f"dim Lie(X) = {basis.N} does not exceed n = {spec.n}; "
            f"the lift is trivial.",
        )
    if spec.q <= 2:
        messages.warning("size", f"Homogeneous dimension q={spec.q} does not exceed 2.")
    if basis.step > MAX_LIFT_STEP:
        messages.warning(
            "lift",
            f"Nilpotency step {basis.step} exceeds {MAX_LIFT_STEP}; "
            f"the system cannot be lifted.",
        )
    if spec.drift is not None:
        messages.info("drift", "The drift only enters the symbolic layer.")

    return messages, basis
