"""Circuit intermediate representation for the oscillator-qubit instruction set.

Instruction semantics (Q is the oscillator position, N its number operator):

    CD q o t        |0><0| e^{+i t Q} + |1><1| e^{-i t Q}
    CQ q o t        |0><0| e^{+i t Q^2} + |1><1| e^{-i t Q^2}
    ROT q a t       e^{i t sigma_a}, a in {x, y, z}
    PAULI2 q p ab t e^{i t sigma_a (x) sigma_b}
    R o t           e^{-i t N}               (unconditional)
    R q o t         e^{-i t sigma_z N}
    MEASURE q b     Z-basis measurement heralded on outcome b
    PARITY q c...   flip q iff the number of |1> among c... has parity
                    (len(c) - 1) mod 2, i.e. on valid unary codewords
    RESET q         return a qubit in a definite basis state to |0>

Text form: one instruction per line with ``q<i>`` / ``osc<i>`` operands and
``repr`` floats, preceded by ``# qubits <n> oscillators <m> policy <p>``.
"""

from dataclasses import dataclass, field
from collections import Counter

from .._validation import check_scalar

KINDS = ("CD", "CQ", "ROT", "PAULI2", "R", "MEASURE", "PARITY", "RESET")
AXES = ("x", "y", "z")
POLICIES = ("project", "sample")


@dataclass(frozen=True)
class Instruction:
    kind: str
    qubits: tuple = ()
    osc: tuple = ()
    angle: float = 0.0
    axes: str = ""
    outcome: int = -1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instruction kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "osc", tuple(int(o) for o in self.osc))
        object.__setattr__(self, "angle", check_scalar(float(self.angle), "angle"))
        nq, no = len(self.qubits), len(self.osc)
        shape = {
            "CD": (1, 1), "CQ": (1, 1), "ROT": (1, 0), "PAULI2": (2, 0),
            "MEASURE": (1, 0), "RESET": (1, 0),
        }
        if self.kind in shape and (nq, no) != shape[self.kind]:
            raise ValueError(f"{self.kind} takes {shape[self.kind]} (qubits, oscillators)")
        if self.kind == "R" and (nq > 1 or no != 1):
            raise ValueError("R takes one oscillator and at most one qubit")
        if self.kind == "PARITY" and (nq < 2 or no):
            raise ValueError("PARITY takes a target qubit and at least one control")
        if len(set(self.qubits)) != nq:
            raise ValueError(f"{self.kind}: repeated qubit operand")
        if self.kind == "ROT" and self.axes not in AXES:
            raise ValueError(f"ROT axis must be one of {AXES}")
        if self.kind == "PAULI2" and (len(self.axes) != 2 or any(a not in AXES for a in self.axes)):
            raise ValueError("PAULI2 axes must be two letters from x, y, z")
        if self.kind == "MEASURE" and self.outcome not in (0, 1):
            raise ValueError("MEASURE must declare its heralded outcome (0 or 1)")

    def to_text(self):
        qs = [f"q{q}" for q in self.qubits]
        os_ = [f"osc{o}" for o in self.osc]
        if self.kind in ("CD", "CQ"):
            return f"{self.kind} {qs[0]} {os_[0]} {self.angle!r}"
        if self.kind == "ROT":
            return f"ROT {qs[0]} {self.axes} {self.angle!r}"
        if self.kind == "PAULI2":
            return f"PAULI2 {qs[0]} {qs[1]} {self.axes} {self.angle!r}"
        if self.kind == "R":
            return " ".join(["R", *qs, os_[0], repr(self.angle)])
        if self.kind == "MEASURE":
            return f"MEASURE {qs[0]} {self.outcome}"
        if self.kind == "PARITY":
            return " ".join(["PARITY", *qs])
        return f"RESET {qs[0]}"

    @classmethod
    def from_text(cls, line):
        tok = line.split()
        if not tok:
            raise ValueError("empty instruction line")
        kind, args = tok[0].upper(), tok[1:]

        def q(s):
            if not s.startswith("q") or s.startswith("osc"):
                raise ValueError(f"expected a qubit operand, got {s!r}")
            return int(s[1:])

        def o(s):
            if not s.startswith("osc"):
                raise ValueError(f"expected an oscillator operand, got {s!r}")
            return int(s[3:])

        try:
            if kind in ("CD", "CQ"):
                return cls(kind, (q(args[0]),), (o(args[1]),), float(args[2]))
            if kind == "ROT":
                return cls(kind, (q(args[0]),), (), float(args[2]), axes=args[1])
            if kind == "PAULI2":
                return cls(kind, (q(args[0]), q(args[1])), (), float(args[3]), axes=args[2])
            if kind == "R":
                if len(args) == 2:
                    return cls(kind, (), (o(args[0]),), float(args[1]))
                return cls(kind, (q(args[0]),), (o(args[1]),), float(args[2]))
            if kind == "MEASURE":
                return cls(kind, (q(args[0]),), outcome=int(args[1]))
            if kind == "PARITY":
                return cls(kind, tuple(q(a) for a in args))
            if kind == "RESET":
                return cls(kind, (q(args[0]),))
        except IndexError:
            raise ValueError(f"too few operands in {line!r}") from None
        raise ValueError(f"unknown instruction {tok[0]!r}")


def cd(qubit, osc, theta):
    return Instruction("CD", (qubit,), (osc,), theta)


def cq(qubit, osc, theta):
    return Instruction("CQ", (qubit,), (osc,), theta)


def rot(qubit, axis, angle):
    return Instruction("ROT", (qubit,), (), angle, axes=axis)


def pauli2(q0, q1, axes, angle):
    return Instruction("PAULI2", (q0, q1), (), angle, axes=axes)


def phase_rotation(osc, theta, qubit=None):
    return Instruction("R", () if qubit is None else (qubit,), (osc,), theta)


def measure(qubit, outcome):
    return Instruction("MEASURE", (qubit,), outcome=outcome)


def parity_flip(target, controls):
    return Instruction("PARITY", (target, *controls))


def reset(qubit):
    return Instruction("RESET", (qubit,))


@dataclass
class Circuit:
    """Ordered instruction list over ``n_qubits`` qubits and ``n_osc`` oscillators."""

    n_qubits: int
    n_osc: int
    instructions: list = field(default_factory=list)
    policy: str = "project"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        check_scalar(self.n_qubits, "n_qubits", min_val=0, integer=True)
        check_scalar(self.n_osc, "n_osc", min_val=0, integer=True)
        if self.policy not in POLICIES:
            raise ValueError(f"herald policy must be one of {POLICIES}")
        for ins in self.instructions:
            self._check(ins)

    def _check(self, ins):
        if any(q >= self.n_qubits or q < 0 for q in ins.qubits):
            raise ValueError(f"{ins.kind}: qubit operand out of range for {self.n_qubits} qubits")
        if any(o >= self.n_osc or o < 0 for o in ins.osc):
            raise ValueError(f"{ins.kind}: oscillator operand out of range for {self.n_osc}")

    def append(self, ins):
        self._check(ins)
        self.instructions.append(ins)
        return self

    def extend(self, other):
        items = other.instructions if isinstance(other, Circuit) else other
        for ins in items:
            self.append(ins)
        return self

    def __len__(self):
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def counts(self):
        return Counter(ins.kind for ins in self.instructions)

    @property
    def cd_count(self):
        return self.counts()["CD"]

    def to_text(self):
        head = f"# qubits {self.n_qubits} oscillators {self.n_osc} policy {self.policy}\n"
        return head + "".join(ins.to_text() + "\n" for ins in self.instructions)

    @classmethod
    def from_text(cls, text):
        n_qubits = n_osc = None
        policy = "project"
        body = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                tok = line[1:].split()
                if tok[:1] == ["qubits"]:
                    n_qubits, n_osc, policy = int(tok[1]), int(tok[3]), tok[5]
                continue
            body.append(Instruction.from_text(line))
        if n_qubits is None:
            raise ValueError("circuit text lacks the '# qubits ... oscillators ...' header")
        return cls(n_qubits, n_osc, body, policy)
