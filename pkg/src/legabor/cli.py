"""Command-line experiment driver.

Every subcommand writes one CSV: a header, one row per case, then a ``#``
comment block with the config hash, seed, tool version and any summary
values.  Exit status is 0 when every asserted bound held, 1 when one was
violated and 2 on usage errors (bad config, unwritable output).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__, kernels
from . import config as config_mod
from ._runtime import derive_rng, parallel_map
from .char_sums import (
    BoundCheck,
    chung_double_sum,
    polya_vinogradov_max,
    twisted_autocorrelation_table,
    weil_product_sum,
)
from .config import COMMANDS, ConfigError, ExperimentConfig, parse_config
from .flat_rip import (
    flat_rip_delta,
    lemma_hypotheses,
    pair_sum_inner_product_direct,
    pair_sum_inner_product_spectral,
    rip_delta_sampled,
    rip_order_from_flat,
    sample_disjoint_pair,
)
from .gabor import BRUTE_COHERENCE_MAX_P, NormConvention, coherence, gram_submatrix
from .linalg import hermitian_eigh
from .recovery import recovery_experiment
from .theorem_sums import (
    ThetaParams,
    dirichlet_kernel_mag,
    log_spaced_primes,
    piecewise_bound_sum,
    scaling_fit,
    sine_sum_exact,
    singular_region_sums,
    sum_split_decompose,
    trivial_bound,
)
from .zpz import build_context, gauss_sum, legendre_symbol, primes_between

RECOVERY_MAX_K = 8


class UsageError(ValueError):
    pass


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)
    footer: dict[str, object] = field(default_factory=dict)
    ok: bool = True


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render(table: Table, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        if len(row) != len(table.header):
            raise AssertionError(f"row width {len(row)} != header width {len(table.header)}")
        w.writerow([_fmt(v) for v in row])
    buf.write(f"# config_hash={cfg.digest()}\n")
    buf.write(f"# seed={cfg.seed}\n")
    buf.write(f"# version={__version__}\n")
    buf.write(f"# status={'ok' if table.ok else 'violation'}\n")
    for key, value in table.footer.items():
        buf.write(f"# {key}={_fmt(value)}\n")
    return buf.getvalue()


def _primes(cfg: ExperimentConfig) -> list[int]:
    if cfg.p is not None:
        return [cfg.p]
    lo, hi = cfg.p_range
    primes = [q for q in primes_between(lo, hi) if q > 2]
    if not primes:
        raise UsageError(f"no odd primes in {lo}:{hi}")
    return primes


def _params(cfg: ExperimentConfig, p: int) -> ThetaParams:
    if cfg.m1len is None and cfg.m2len is None:
        return ThetaParams.realize(p, cfg.sigma, cfg.delta, cfg.epsilon, cfg.mode)
    auto = ThetaParams.realize(p, cfg.sigma, cfg.delta, cfg.epsilon, "free")
    params = ThetaParams(p, auto.n, cfg.m1len or auto.m1len, cfg.m2len or auto.m2len,
                         cfg.sigma, cfg.delta, cfg.epsilon)
    if cfg.mode == "theorem":
        bad = params.theorem_violations()
        if bad:
            raise UsageError("; ".join(bad))
    return params


# ---------------------------------------------------------------------------
# suites


def run_verify(cfg: ExperimentConfig) -> Table:
    """Fast invariant suite on small primes."""
    t = Table(["check", "p", "value", "tolerance", "passed"])

    def add(name, p, value, tol, passed):
        t.rows.append([name, p, float(value), float(tol), bool(passed)])
        t.ok &= bool(passed)

    for p in (5, 7, 11, 13, 31):
        ctx = build_context(p)
        mult = max(abs(legendre_symbol(a * b, p) - legendre_symbol(a, p) * legendre_symbol(b, p))
                   for a in range(p) for b in range(p))
        add("chi_multiplicative", p, mult, 0, mult == 0)
        g = abs(abs(gauss_sum(ctx)) - math.sqrt(p))
        add("gauss_modulus", p, g, 1e-10, g <= 1e-10)
        diff = abs(coherence(ctx, "paper") - coherence(ctx, "paper", mode="brute"))
        add("coherence_shift_vs_brute", p, diff, 1e-10, diff <= 1e-10)
        mu = coherence(ctx, "paper")
        add("coherence_weil", p, mu, 2 / math.sqrt(p), mu <= 2 / math.sqrt(p) * (1 + 1e-9))
        worst = 0.0
        for length in range(1, p + 1):
            for shift in range(p):
                direct = abs(np.exp(2j * np.pi * np.arange(length) * shift / p).sum())
                worst = max(worst, abs(dirichlet_kernel_mag(p, length, shift) - direct) / length)
        add("dirichlet_kernel", p, worst, 1e-9, worst <= 1e-9)
        tab = twisted_autocorrelation_table(ctx)[1:, 1:]
        add("weil_twisted", p, tab.max(), 2 * math.sqrt(p), tab.max() <= 2 * math.sqrt(p) * (1 + 1e-9))
        pv = polya_vinogradov_max(ctx)
        add("polya_vinogradov", p, pv.value, pv.bound, pv.holds)
        if p >= 7:
            params = ThetaParams(p, 1 + p // 3, 1, 1, 0.1, 0.3)
            add("sine_sum_degenerate", p, abs(sine_sum_exact(params) - (p - 2)), 1e-9 * p,
                abs(sine_sum_exact(params) - (p - 2)) <= 1e-9 * p)

    ctx = build_context(31)
    rng = derive_rng(cfg.seed, 0)
    worst = 0.0
    for _ in range(20):
        o1, o2 = sample_disjoint_pair(rng, 31, 5)
        d = pair_sum_inner_product_direct(ctx, o1, o2)
        s = pair_sum_inner_product_spectral(ctx, o1, o2)
        worst = max(worst, abs(d - s) / max(abs(d), 1e-300) if abs(d) > 1e-12 else abs(d - s))
    add("flat_rip_dual_path", 31, worst, 1e-8, worst <= 1e-8)

    for conv, expect in (("unit", 0.0), ("paper", 1 / 31)):
        rep = rip_delta_sampled(ctx, 1, trials=5, conv=conv, seed=cfg.seed)
        add(f"rip_order1_{conv}", 31, abs(rep.delta - expect), 1e-12, abs(rep.delta - expect) <= 1e-12)
    G = gram_submatrix(ctx, [(0, 0), (1, 2)], "unit")
    w = hermitian_eigh(G)[0]
    mu = abs(G[0, 1])
    err = max(abs(w[0] - (1 - mu)), abs(w[1] - (1 + mu)))
    add("gram_2x2_eigen", 31, err, 1e-12, err <= 1e-12)
    order, dlt = rip_order_from_flat(1024, 0.01, 1)
    err = abs(dlt - 0.44 * math.log(1024)) + abs(order - 2048)
    add("lemma_transfer", 0, err, 1e-12, err <= 1e-12)
    t.footer["backend"] = kernels.BACKEND
    return t


def run_coherence(cfg: ExperimentConfig) -> Table:
    conv = NormConvention.parse(cfg.convention)
    t = Table(["p", "convention", "coherence", "bound", "ratio", "holds", "brute_coherence"])

    def one(p):
        ctx = build_context(p)
        mu = coherence(ctx, conv)
        brute = coherence(ctx, conv, mode="brute") if p <= BRUTE_COHERENCE_MAX_P else None
        return p, mu, brute

    for p, mu, brute in parallel_map(one, _primes(cfg), cfg.workers):
        c2 = 1.0 / p if conv is NormConvention.PAPER else 1.0 / (p - 1)
        bound = c2 * 2 * math.sqrt(p)
        check = BoundCheck(mu, bound)
        agree = brute is None or abs(brute - mu) <= 1e-10
        t.rows.append([p, conv.value, mu, bound, check.ratio, check.holds, brute])
        t.ok &= check.holds and agree
    return t


SINE_HEADER = ["p", "n", "m1len", "m2len", "sine_sum", "trivial_bound", "ratio"]


def run_sine_sum(cfg: ExperimentConfig) -> Table:
    t = Table(SINE_HEADER + ["piecewise_bound"])

    def one(p):
        params = _params(cfg, p)
        value = sine_sum_exact(params)
        pw = piecewise_bound_sum(params) if min(params.m1len, params.m2len) >= 2 else None
        return params, value, trivial_bound(params), pw

    for params, value, triv, pw in parallel_map(one, _primes(cfg), cfg.workers):
        holds = BoundCheck(value, triv).holds and (pw is None or BoundCheck(value, pw).holds)
        t.rows.append([params.p, params.n, params.m1len, params.m2len, value, triv, value / triv, pw])
        t.ok &= holds
    return t


def run_scaling(cfg: ExperimentConfig) -> Table:
    if cfg.p_range is None:
        raise UsageError("scaling needs a prime range (p_range)")
    lo, hi = cfg.p_range
    primes = log_spaced_primes(lo, hi, cfg.num_primes)
    if len(primes) < 5:
        raise UsageError(f"only {len(primes)} primes in {lo}:{hi}; a fit needs 5")
    t = Table(list(SINE_HEADER))

    def one(p):
        params = _params(cfg, p)
        return params, sine_sum_exact(params), trivial_bound(params), singular_region_sums(params)

    results = parallel_map(one, primes, cfg.workers)
    for params, value, triv, _ in results:
        t.rows.append([params.p, params.n, params.m1len, params.m2len, value, triv, value / triv])
        t.ok &= BoundCheck(value, triv).holds
    fit = scaling_fit((r[0].p, r[1]) for r in results)
    limit = 1.5 - cfg.alpha + 0.10
    t.footer.update(alpha=cfg.alpha, exponent=fit.exponent, logK=fit.logK, r2=fit.r2,
                    exponent_limit=limit)
    t.ok &= fit.exponent <= limit and fit.r2 >= 0.9
    sing_limit = 1.5 - cfg.delta + cfg.epsilon + 0.15
    for name, col in (("near_zero", 0), ("near_neg_n", 1)):
        pts = [(r[0].p, r[3][col]) for r in results if r[3][col] > 0]
        if len(pts) >= 5:
            sfit = scaling_fit(pts)
            t.footer[f"{name}_exponent"] = sfit.exponent
            t.footer[f"{name}_r2"] = sfit.r2
            t.ok &= sfit.exponent <= sing_limit
    t.footer["singular_exponent_limit"] = sing_limit
    return t


def run_flat_rip(cfg: ExperimentConfig) -> Table:
    conv = NormConvention.parse(cfg.convention)
    t = Table(["p", "k", "trials", "convention", "delta", "relaxed_delta", "mu",
               "dual_path_rel_err", "rip_order", "rip_delta", "k_hypothesis", "mu_hypothesis"])
    for p in _primes(cfg):
        ctx = build_context(p)
        k = cfg.k or math.isqrt(p)
        if cfg.mode == "theorem" and k > math.isqrt(p):
            raise UsageError(f"k={k} exceeds sqrt(p) for p={p} in theorem mode")
        pairs = [sample_disjoint_pair(derive_rng(cfg.seed, p, tr), p, k) for tr in range(cfg.trials)]

        def dual(pair):
            d = pair_sum_inner_product_direct(ctx, *pair, conv)
            s = pair_sum_inner_product_spectral(ctx, *pair, conv)
            scale = max(abs(d), abs(s))
            return abs(d - s) / scale if scale > 1e-12 else abs(d - s)

        err = max(parallel_map(dual, pairs, cfg.workers))
        rep = flat_rip_delta(ctx, k, conv=conv, pairs=pairs, theorem_mode=cfg.mode == "theorem",
                             workers=cfg.workers)
        order, rip_delta = rip_order_from_flat(k, rep.delta, 1)
        hyp = lemma_hypotheses(k, rep.mu)
        t.rows.append([p, k, rep.trials, conv.value, rep.delta, rep.relaxed_delta, rep.mu, err,
                       order, rip_delta, hyp["k_at_least_1024"], hyp["coherence_at_most_1_over_k"]])
        t.ok &= err <= 1e-8
    return t


def run_decompose(cfg: ExperimentConfig) -> Table:
    t = Table(["p", "n", "m1len", "m2len", "e1", "s_main", "e2", "e3", "total_bound", "discrepancy",
               "sine_sum", "near_zero", "near_neg_n", "max_abs_residual"])

    def one(p):
        params = _params(cfg, p)
        dec = sum_split_decompose(params, theorem_mode=cfg.mode == "theorem")
        return params, dec, sine_sum_exact(params), singular_region_sums(params)

    for params, dec, value, (nz, nn) in parallel_map(one, _primes(cfg), cfg.workers):
        resid = max((abs(r[2]) for r in dec.residuals), default=0.0)
        t.rows.append([params.p, params.n, params.m1len, params.m2len, dec.e1, dec.s_main, dec.e2,
                       dec.e3, dec.total_bound, dec.discrepancy, value, nz, nn, resid])
        partition = dec.regions["e1"].isdisjoint(dec.regions["main"]) and \
            len(dec.regions["e1"]) + len(dec.regions["main"]) == params.p - 2
        t.ok &= partition and BoundCheck(value, piecewise_bound_sum(params)).holds
    return t


def _random_shifts(rng, p, kmax=4):
    k = int(rng.integers(1, min(kmax, p - 1) + 1))
    return sorted(int(d) for d in rng.choice(np.arange(1, p), size=k, replace=False))


def run_char_sums(cfg: ExperimentConfig) -> Table:
    t = Table(["p", "m", "n", "value", "bound", "ratio", "holds"])
    pv_worst = weil1_worst = chung_worst = 0.0
    weil1_count = 0
    for p in _primes(cfg):
        ctx = build_context(p)
        tab = twisted_autocorrelation_table(ctx)
        bound = 2.0 * math.sqrt(p)
        for m in range(1, p):
            for n in range(1, p):
                check = BoundCheck(float(tab[m, n]), bound)
                t.rows.append([p, m, n, check.value, bound, check.ratio, check.holds])
                t.ok &= check.holds
        pv = polya_vinogradov_max(ctx)
        pv_worst = max(pv_worst, pv.ratio)
        t.ok &= pv.holds
        for tr in range(cfg.trials):
            rng = derive_rng(cfg.seed, p, tr)
            w = weil_product_sum(ctx, _random_shifts(rng, p))
            c = chung_double_sum(ctx, rng.choice(p, size=int(rng.integers(1, p)), replace=False),
                                 rng.choice(p, size=int(rng.integers(1, p)), replace=False))
            weil1_worst = max(weil1_worst, w.ratio)
            chung_worst = max(chung_worst, c.ratio)
            weil1_count += 1
            t.ok &= w.holds and c.holds
    t.footer.update(twisted_rows=len(t.rows), polya_vinogradov_max_ratio=pv_worst,
                    weil_product_tuples=weil1_count, weil_product_max_ratio=weil1_worst,
                    chung_max_ratio=chung_worst)
    return t


def run_recover(cfg: ExperimentConfig) -> Table:
    conv = NormConvention.parse(cfg.convention)
    if cfg.method == "omp" and conv is not NormConvention.UNIT:
        raise UsageError("OMP needs convention=unit")
    kmax = cfg.k or RECOVERY_MAX_K
    t = Table(["p", "k", "method", "trials", "successes", "rate"])
    for p in _primes(cfg):
        ctx = build_context(p)
        mu = coherence(ctx, conv)
        # exact recovery is guaranteed while (2k - 1) mu < 1
        guaranteed = int((1 + 1 / mu) // 2) if mu > 0 else kmax
        rows = recovery_experiment(ctx, range(1, kmax + 1), cfg.trials, cfg.seed, cfg.method,
                                   conv, cfg.workers)
        for r in rows:
            t.rows.append([p, r.k, cfg.method, r.trials, r.successes, r.rate])
            if cfg.method == "omp" and (2 * r.k - 1) * mu < 1:
                t.ok &= r.successes == r.trials
        t.footer[f"coherence_p{p}"] = mu
        t.footer[f"guaranteed_k_p{p}"] = guaranteed
    return t


SUITES: dict[str, Callable[[ExperimentConfig], Table]] = {
    "verify": run_verify,
    "coherence": run_coherence,
    "sine-sum": run_sine_sum,
    "scaling": run_scaling,
    "flat-rip": run_flat_rip,
    "decompose": run_decompose,
    "char-sums": run_char_sums,
    "recover": run_recover,
}


def run(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        table = SUITES[cfg.command](cfg)
    except (UsageError, ValueError) as exc:
        print(f"legabor {cfg.command}: {exc}", file=stderr)
        return 2
    text = render(table, cfg)
    if cfg.out == "-":
        stdout.write(text)
    else:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"legabor: cannot write {cfg.out}: {exc}", file=stderr)
            return 2
    if not table.ok:
        print(f"legabor {cfg.command}: bound violation", file=stderr)
    return 0 if table.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="legabor",
        description="Legendre-symbol Gabor frames: character-sum checks, sine-sum sweeps, recovery.",
        epilog=config_mod.__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="suite to run (or set in --config)")
    ap.add_argument("--config", metavar="PATH", help="key=value config file")
    grp = ap.add_mutually_exclusive_group()
    grp.add_argument("--p", type=str, metavar="N")
    grp.add_argument("--p-range", metavar="LO:HI")
    for name in ("sigma", "delta", "epsilon"):
        ap.add_argument(f"--{name}", metavar="F")
    for name in ("trials", "seed", "k", "workers", "num-primes", "m1len", "m2len"):
        ap.add_argument(f"--{name}", metavar="N")
    ap.add_argument("--convention", choices=("paper", "unit"))
    ap.add_argument("--mode", choices=("free", "theorem"))
    ap.add_argument("--method", choices=("omp", "ista"))
    ap.add_argument("--out", metavar="PATH", help="CSV destination, '-' for stdout")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except (OSError, UnicodeDecodeError) as exc:
            print(f"legabor: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 2
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = parse_config(text, overrides, command=args.command)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"legabor: {v}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
