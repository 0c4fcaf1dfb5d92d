"""Built-in DSL programs: QFT/AQFT, Trotterized TFIM evolution, three QPE
variants, Shor's modular exponentiation skeleton, and a Bell-pair warm-up.

Builders emit DSL source text (inspectable via `stdlib emit`) and parse it,
so every built-in exercises the front end.  Pass n for a concrete size or
leave it None to keep the size symbolic.
"""

from __future__ import annotations

import math

from . import ir
from .parser import parse

TWO_PI = 6.283185307179586

_CROT = """\
def crot(@dontcare theta: real) {
    Rz(theta);
    Rz(theta);
    Rz(theta);
    CNOT();
    CNOT();
}
"""


def _entry(n, body: str) -> str:
    """Wrap a main body, binding n concretely or leaving it a parameter."""
    if n is None:
        return f"def main(n: int) {{\n{body}}}\n"
    return f"def main() {{\n    let n = {int(n)};\n{body}}}\n"


def bell_source() -> str:
    return "def main() {\n    H();\n    CNOT();\n}\n"


def qft_source(n=None) -> str:
    body = """\
    for i in 0 .. n {
        H();
        for j in 1 .. n - i {
            crot(0.0);
        }
    }
"""
    return _entry(n, body) + _CROT


def aqft_source(n=None) -> str:
    # cutoff l = ceil(log2(n / eps_QFT)) + 3; the guard keeps at most l
    # controlled rotations per qubit
    body = """\
    epsilon eps_QFT;
    let l = ceil(log2(n / eps_QFT)) + 3;
    for i in 0 .. n {
        H();
        for j in 1 .. n - i {
            if j <= l {
                crot(0.0);
            }
        }
    }
"""
    return _entry(n, body) + _CROT


def tfim_trotter_source(n=None, J=1.0, h=1.0, t=1.0, c_tr=1.0) -> str:
    body = f"    tfim(n, {float(J)!r}, {float(h)!r}, {float(t)!r});\n"
    return (
        _entry(n, body)
        + f"""\
def tfim(m: int, @dontcare J: real, @dontcare h: real, @dontcare t: real) {{
    epsilon eps_TE;
    let M = ceil({float(c_tr)!r} / eps_TE ^ 0.5);
    for s in 0 .. M {{
        for k in 0 .. m {{
            CNOT();
            Rz(2.0 * J * t / M);
            CNOT();
        }}
        for k in 0 .. m {{
            Rx(2.0 * h * t / M);
        }}
    }}
}}
"""
    )


def _qpe_source(n, p: float, inverse: str) -> str:
    if not (0.0 < p < 1.0):
        raise ValueError("success probability p must be in (0, 1)")
    pad = math.ceil(math.log2(2.0 + 1.0 / (2.0 * (1.0 - p))))
    tail = {"none": "", "qft": "    qft_part(nq);\n", "aqft": "    aqft_part(nq);\n"}[inverse]
    body = f"""\
    epsilon eps_QPE;
    let nq = ceil(log2({TWO_PI!r} / eps_QPE)) + {pad};
    for i in 0 .. nq {{
        H();
        for r in 0 .. 2 ^ i {{
            cu(n);
        }}
    }}
{tail}"""
    src = _entry(n, body)
    src += """\
def cu(m: int) {
    epsilon eps_TE;
    let M = ceil(1.0 / eps_TE ^ 0.5);
    for s in 0 .. M {
        ctrot_step(m);
    }
}
def ctrot_step(m: int) {
    for k in 0 .. m {
        CNOT();
        crot(0.0);
        CNOT();
    }
    for k in 0 .. m {
        crot(0.0);
    }
}
"""
    if inverse == "qft":
        src += """\
def qft_part(m: int) {
    for i in 0 .. m {
        H();
        for j in 1 .. m - i {
            crot(0.0);
        }
    }
}
"""
    elif inverse == "aqft":
        src += _AQFT_PART
    return src + _CROT


_AQFT_PART = """\
def aqft_part(m: int) {
    epsilon eps_QFT;
    let l = ceil(log2(m / eps_QFT)) + 3;
    for i in 0 .. m {
        H();
        for j in 1 .. m - i {
            if j <= l {
                crot(0.0);
            }
        }
    }
}
"""


def qpe_simplified_source(n=None, p=0.5) -> str:
    return _qpe_source(n, p, "none")


def qpe_with_qft_source(n=None, p=0.5) -> str:
    return _qpe_source(n, p, "qft")


def qpe_with_aqft_source(n=None, p=0.5) -> str:
    return _qpe_source(n, p, "aqft")


def shor_source(n=None) -> str:
    # Beauregard-style skeleton: 2n semiclassically processed exponent bits,
    # each driving 2n controlled modular additions; every addition uses 5
    # Fourier-basis additions of (n+1) rotations and 10 aqft(n+1) passes,
    # plus a small fixed set of bookkeeping gates
    body = """\
    for b in 0 .. 2 * n {
        for a in 0 .. 2 * n {
            cmodadd(n);
        }
    }
"""
    return (
        _entry(n, body)
        + """\
def cmodadd(m: int) {
    for f in 0 .. 5 {
        fadd(m);
    }
    for g in 0 .. 10 {
        aqft_part(m + 1);
    }
    CNOT();
    CNOT();
    X();
    X();
    T();
}
def fadd(m: int) {
    for k in 0 .. m + 1 {
        Rz(0.0);
    }
}
"""
        + _AQFT_PART
        + _CROT
    )


_SOURCES = {
    "bell": bell_source,
    "qft": qft_source,
    "aqft": aqft_source,
    "tfim_trotter": tfim_trotter_source,
    "qpe_simplified": qpe_simplified_source,
    "qpe_with_qft": qpe_with_qft_source,
    "qpe_with_aqft": qpe_with_aqft_source,
    "shor": shor_source,
}

NAMES = tuple(_SOURCES)


def source(name: str, **kw) -> str:
    if name not in _SOURCES:
        raise KeyError(f"unknown stdlib program {name!r}; choose from {', '.join(NAMES)}")
    return _SOURCES[name](**kw)


def build(name: str, **kw) -> ir.Program:
    return parse(source(name, **kw))


def bell() -> ir.Program:
    return build("bell")


def qft(n=None) -> ir.Program:
    return build("qft", n=n)


def aqft(n=None) -> ir.Program:
    return build("aqft", n=n)


def tfim_trotter(n=None, J=1.0, h=1.0, t=1.0, c_tr=1.0) -> ir.Program:
    return build("tfim_trotter", n=n, J=J, h=h, t=t, c_tr=c_tr)


def qpe_simplified(n=None, p=0.5) -> ir.Program:
    return build("qpe_simplified", n=n, p=p)


def qpe_with_qft(n=None, p=0.5) -> ir.Program:
    return build("qpe_with_qft", n=n, p=p)


def qpe_with_aqft(n=None, p=0.5) -> ir.Program:
    return build("qpe_with_aqft", n=n, p=p)


def shor(n=None) -> ir.Program:
    return build("shor", n=n)
