"""The four-step proof pipeline and its machine-readable certificates.

prove() runs existence -> linear stability -> Birkhoff normal form -> twist
condition for a configured periodic orbit, short-circuiting into a partial
certificate when a stage fails.  All certified intervals are serialized as
outward-rounded decimal endpoint pairs; volatile metadata (wall time) is
kept apart from the reproducible payload.
"""

import json
import time
from fractions import Fraction

from . import __version__
from .approx import ApproxFlow, newton_polish
from .errors import ConfigError, KamcertError
from .existence import FixedPointProblem, prove_fixed_point
from .intervals import Interval, Precision, interval_to_decimal_pair
from .ivlinalg import inverse_enclosure
from .jets import Jet
from .normalform import (
    PolyMap,
    diagonalize,
    kill_cubic,
    kill_quadratic,
    torsion,
)
from .poincare import SectionedMap
from .spectral import (
    check_basis_symplectic,
    symplectic_basis,
    verified_eigs,
)
from .systems import EIGHT_ENERGY, QuarticSystem, ReducedThreeBody

__all__ = ["RunConfig", "Certificate", "prove"]


class RunConfig:
    """Validated proof-run configuration.

    Decimal parameters stay strings until they meet a Precision, so parsing
    never rounds before the run's own arithmetic does.
    """

    DEFAULTS = {
        "system": None,
        "c": None,
        "M": None,
        "h": None,
        "seed": None,
        "period": None,
        "shooting": None,
        "precision_bits": 53,
        "taylor_order": 30,
        "tol": "1e-21",
        "box_radius": None,
        "max_step": "0.5",
        "digits": None,
        "label": "",
    }

    def __init__(self, **kwargs):
        opts = dict(self.DEFAULTS)
        for key, val in kwargs.items():
            if key not in opts:
                raise ConfigError(f"unknown config key: {key}")
            opts[key] = val
        if opts["system"] not in ("quartic", "threebody"):
            raise ConfigError("system must be quartic or threebody")
        if opts["seed"] is None or opts["period"] is None:
            raise ConfigError("seed and period are required")
        self.system = opts["system"]
        self.c = opts["c"]
        self.M = opts["M"]
        self.h = opts["h"]
        self.seed = [str(s) for s in opts["seed"]]
        self.period = int(opts["period"])
        self.shooting = (
            None if opts["shooting"] in (None, "auto")
            else int(opts["shooting"])
        )
        self.precision_bits = int(opts["precision_bits"])
        self.taylor_order = int(opts["taylor_order"])
        self.tol = float(Fraction(str(opts["tol"])))
        self.box_radius = (
            None if opts["box_radius"] is None
            else float(Fraction(str(opts["box_radius"])))
        )
        self.max_step = float(Fraction(str(opts["max_step"])))
        self.digits = (
            int(opts["digits"])
            if opts["digits"] is not None
            else max(17, int(self.precision_bits * 0.302) + 2)
        )
        self.label = str(opts["label"])
        if self.system == "quartic":
            if self.c is None:
                raise ConfigError("quartic runs need the parameter c")
            if self.h is None:
                self.h = "1/2"
        else:
            if self.M is None:
                raise ConfigError("threebody runs need the parameter M")
            if self.h is None:
                self.h = EIGHT_ENERGY
        n_free = 2 if self.system == "quartic" else 4
        if len(self.seed) != n_free:
            raise ConfigError(f"seed must have {n_free} components")
        if self.shooting is not None:
            s = self.shooting
            k = self.period
            if s != 2 * k and (s < 1 or k % s):
                raise ConfigError(
                    "shooting must divide the period or equal twice of it"
                )

    def build_system(self):
        if self.system == "quartic":
            return QuarticSystem(Fraction(str(self.c)), Fraction(str(self.h)))
        return ReducedThreeBody(Fraction(str(self.M)), Fraction(str(self.h)))

    def as_dict(self):
        return {
            "system": self.system,
            "c": None if self.c is None else str(self.c),
            "M": None if self.M is None else str(self.M),
            "h": str(self.h),
            "seed": list(self.seed),
            "period": self.period,
            "shooting": self.shooting,
            "precision_bits": self.precision_bits,
            "taylor_order": self.taylor_order,
            "tol": repr(self.tol),
            "box_radius": self.box_radius,
            "max_step": self.max_step,
            "digits": self.digits,
            "label": self.label,
        }

    @classmethod
    def from_file(cls, path):
        opts = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line: {line!r}")
                key, val = (part.strip() for part in line.split("=", 1))
                if key == "seed":
                    opts[key] = [s.strip() for s in val.split(",")]
                else:
                    opts[key] = val
        return cls(**opts)


def _iv_json(x, digits):
    lo, hi = interval_to_decimal_pair(x, digits)
    return {"lo": lo, "hi": hi}


def _civ_json(z, digits):
    return {"re": _iv_json(z.re, digits), "im": _iv_json(z.im, digits)}


class Certificate:
    """Verdicts plus every certified enclosure of one proof run."""

    def __init__(self, config):
        self.config = config
        self.verdicts = {
            "existence": False,
            "linear_stability": False,
            "nonresonance": False,
            "kam_twist": False,
        }
        self.existence = None
        self.spectrum = None
        self.normal_form = None
        self.torsion = None
        self.failure = None
        self.wall_time = None

    def as_dict(self):
        payload = {
            "kamcert_version": __version__,
            "config": self.config.as_dict(),
            "verdicts": dict(self.verdicts),
            "existence": self.existence,
            "spectrum": self.spectrum,
            "normal_form": self.normal_form,
            "torsion": self.torsion,
            "failure": self.failure,
        }
        return {
            "certificate": payload,
            "meta": {"wall_time_s": self.wall_time},
        }

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    @property
    def proved(self):
        return all(self.verdicts.values())


def _segment_seeds(system, config, k, s):
    """Non-rigorous intermediate crossing points for the shooting split."""
    flow = ApproxFlow(system.field)
    chart = system.chart(1)
    seed0 = [float(Fraction(x)) for x in config.seed]
    polished, resid = newton_polish(flow, chart, seed0, iterates=k)
    if s is None:
        s = 2 * k
    if s == 2 * k:
        signs = []
        seeds = [(list(polished), 1)]
        x_full = [Jet.constant(v, 0, 0) for v in chart.lift(polished)]
        t = 0.0
        sign = 1
        for _ in range(2 * k - 1):
            sec = system.section(-sign)
            t, x_full = flow.to_section(x_full, sec, crossings=1, t0=t)
            sign = -sign
            seeds.append(
                ([x_full[i].coeffs[0] for i in chart.free_coords], sign)
            )
        return [(u, sg, -sg, 1) for (u, sg) in seeds], polished, resid
    per = k // s
    seeds = [(list(polished), 1, 1, per)]
    x = list(polished)
    for _ in range(s - 1):
        for _ in range(per):
            x = flow.poincare_point(chart, x, iterates=1)
        seeds.append((list(x), 1, 1, per))
    return seeds, polished, resid


def _radius_policy(config, resid, prec):
    if config.box_radius is not None:
        return config.box_radius
    eps = 2.0 ** (1 - prec.bits)
    return max(1e3 * resid, 10 * eps, 1e-14)


def prove(config):
    """Run the full pipeline; returns a Certificate (possibly partial)."""
    t_start = time.perf_counter()
    cert = Certificate(config)
    prec = Precision(config.precision_bits)
    system = config.build_system()
    k = config.period
    digits = config.digits

    def map_for(count, start_sign, target_sign):
        return SectionedMap(
            system.field,
            system.chart(start_sign),
            iterates=count,
            prec=prec,
            order=config.taylor_order,
            tol=config.tol,
            max_step=config.max_step,
            target_chart=(
                None if target_sign == start_sign
                else system.chart(target_sign)
            ),
        )

    try:
        seeds, polished, resid = _segment_seeds(
            system, config, k, config.shooting
        )
        radius = _radius_policy(config, resid, prec)
        segments = []
        for u, start_sign, target_sign, count in seeds:
            pmap = map_for(count, start_sign, target_sign)
            seed_iv = [Interval.make(float(v), prec) for v in u]
            segments.append((pmap, seed_iv))
        problem = FixedPointProblem(segments, radius)
        ex = prove_fixed_point(problem)
        cert.existence = ex.as_dict(digits)
        cert.verdicts["existence"] = True
    except KamcertError as exc:
        cert.failure = {"stage": "existence", "error": str(exc)}
        cert.wall_time = time.perf_counter() - t_start
        return cert

    try:
        pmap = map_for(k, 1, 1)
        jet_res = pmap.jet(ex.enclosure, degree=3)
        tmap = PolyMap([_drop_constant(j) for j in jet_res.jets])
        dp = jet_res.linear_matrix()
        spec_cert = verified_eigs(dp)
        basis, lambdas = symplectic_basis(dp, spec_cert)
        sym_ok = check_basis_symplectic(basis, prec)
        cert.spectrum = {
            "eigenvalues": [_civ_json(l, digits) for l in lambdas],
            "moduli": [_iv_json(m, digits) for m in spec_cert.moduli],
            "unit_circle": spec_cert.unit_circle,
            "distinct": spec_cert.distinct,
            "basis_symplectic": sym_ok,
            "pair_swapped": list(basis.swapped),
        }
        if not (spec_cert.unit_circle and spec_cert.distinct and sym_ok):
            cert.failure = {
                "stage": "spectrum",
                "error": "unit circle or distinctness not verified",
            }
            cert.wall_time = time.perf_counter() - t_start
            return cert
        cert.verdicts["linear_stability"] = True
    except KamcertError as exc:
        cert.failure = {"stage": "spectrum", "error": str(exc)}
        cert.wall_time = time.perf_counter() - t_start
        return cert

    try:
        bmat = basis.matrix()
        binv = inverse_enclosure(bmat)
        smap = diagonalize(tmap, bmat, binv, lambdas)
        smap2, nmap, w_gen, q_comps = kill_quadratic(smap, lambdas)
        nform, report = kill_cubic(smap2, lambdas)
        cert.normal_form = {
            "resonant": {
                f"{comp}:" + "".join(map(str, mono)): _civ_json(c, digits)
                for (comp, mono), c in sorted(nform.resonant.items())
            },
            "resonance_report": report.as_dict(),
        }
        cert.verdicts["nonresonance"] = True
    except KamcertError as exc:
        cert.failure = {"stage": "normal_form", "error": str(exc)}
        cert.wall_time = time.perf_counter() - t_start
        return cert

    tor = torsion(nform)
    cert.torsion = {
        "entries": {
            f"d{j}{k_}": _civ_json(v, digits)
            for (j, k_), v in sorted(tor.entries.items())
        },
        "det": _civ_json(tor.det, digits),
        "realness_ok": tor.realness_ok,
        "nonzero_ok": tor.nonzero_ok,
        "symmetry_ok": tor.symmetry_ok,
    }
    cert.verdicts["kam_twist"] = (
        cert.verdicts["existence"]
        and cert.verdicts["linear_stability"]
        and cert.verdicts["nonresonance"]
        and tor.realness_ok
        and tor.nonzero_ok
        and tor.symmetry_ok
    )
    cert.wall_time = time.perf_counter() - t_start
    return cert


def _drop_constant(jet):
    coeffs = list(jet.coeffs)
    inner = coeffs[0]
    zero = inner - inner
    coeffs[0] = zero
    return Jet(jet.table, coeffs)
