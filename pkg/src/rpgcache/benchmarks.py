"""Benchmark game generators (chains, robot tasks, a small smart home)."""
from __future__ import annotations

from fractions import Fraction

from rpgcache.logic import terms as T
from rpgcache.objective import BUCHI, Objective
from rpgcache.rpg import Game, Transition, print_game

FAMILIES = ("chain", "chain-simple", "robot-collect", "robot-deliver", "smarthome-lite")

INT = T.Sort.INT
REAL = T.Sort.REAL


def _c(n, sort=INT):
    return T.const(n, sort)


def _clamp(t: T.Expr, lo: int, hi: int) -> T.Expr:
    return T.ite(T.gt(t, _c(hi)), _c(hi), T.ite(T.lt(t, _c(lo)), _c(lo), t))


def robot_collect() -> tuple[Game, Objective]:
    """The robot fetches as many samples as the environment requests."""
    i = T.var("i", INT)
    samp, req = T.var("samp", INT), T.var("req", INT)
    zero, one = _c(0), _c(1)
    nxt = T.add(samp, i)
    ts = [
        Transition.make("base", T.ge(i, zero), {samp: zero, req: i}, "mine"),
        Transition.make("base", T.lt(i, zero), {samp: zero, req: zero}, "mine"),
        Transition.make("mine", T.ge(samp, req), {}, "move"),
        Transition.make(
            "mine",
            T.and_(T.lt(samp, req), T.ge(i, one)),
            {samp: T.ite(T.ge(nxt, req), req, nxt)},
            "mine",
        ),
        Transition.make("mine", T.and_(T.lt(samp, req), T.lt(i, one)), {samp: T.add(samp, one)}, "mine"),
        Transition.make("move", T.TRUE, {samp: zero}, "base"),
    ]
    inv = {"mine": T.ge(req, zero)}
    g = Game("LIA", [i], [samp, req], ["base", "mine", "move"], inv, ts)
    return g, Objective(BUCHI, {"base"})


def _chain(k: int, simple: bool) -> tuple[Game, Objective]:
    if k < 1:
        raise ValueError("k must be at least 1")
    i = T.var("i", INT)
    y, c = T.var("y", INT), T.var("c", INT)
    xs = [T.var("x", INT)] * k if simple else [T.var(f"x{j}", INT) for j in range(1, k + 1)]
    program = [y, c] + list(dict.fromkeys(xs))
    zero, one = _c(0), _c(1)
    locs = ["init", "goal", "sink"] + [f"l{j}" for j in range(1, k + 1)]
    ts = [
        Transition.make("init", T.TRUE, {c: zero}, "goal"),
        Transition.make("goal", T.gt(c, zero), {}, "sink"),
        Transition.make("goal", T.le(c, zero), {xs[0]: i, y: i}, "l1"),
        Transition.make("sink", T.TRUE, {}, "sink"),
    ]
    for j in range(1, k + 1):
        x = xs[j - 1]
        here = f"l{j}"
        at_zero = T.eq(x, zero)
        if j < k:
            ts.append(Transition.make(here, at_zero, {xs[j]: y}, f"l{j + 1}"))
        else:
            ts.append(Transition.make(here, at_zero, {}, "goal"))
        away = T.not_(at_zero)
        ts.append(Transition.make(here, away, {x: T.add(x, one)}, here))
        ts.append(Transition.make(here, away, {x: T.sub(x, one)}, here))
        ts.append(Transition.make(here, away, {c: i}, "goal"))
    g = Game("LIA", [i], program, locs, {}, ts)
    return g, Objective(BUCHI, {"goal"})


def chain(k: int):
    return _chain(k, simple=False)


def chain_simple(k: int):
    return _chain(k, simple=True)


def robot_deliver(k: int) -> tuple[Game, Objective]:
    """Per product: withdraw money at the bank, then buy at the store."""
    if k < 1:
        raise ValueError("k must be at least 1")
    i = T.var("i", INT)
    q, money, bought = T.var("q", INT), T.var("money", INT), T.var("bought", INT)
    zero, one = _c(0), _c(1)
    locs = ["office"]
    for j in range(1, k + 1):
        locs += [f"bank{j}", f"store{j}"]
    inv = {l: T.ge(q, zero) for l in locs if l != "office"}

    def order(src, dst):
        # the environment names the quantity of the next product
        return [
            Transition.make(src, T.ge(i, zero), {q: i, money: zero, bought: zero}, dst),
            Transition.make(src, T.lt(i, zero), {q: zero, money: zero, bought: zero}, dst),
        ]

    ts = order("office", "bank1")
    for j in range(1, k + 1):
        bank, store = f"bank{j}", f"store{j}"
        ts.append(Transition.make(bank, T.ge(money, q), {}, store))
        ts.append(Transition.make(bank, T.lt(money, q), {money: T.add(money, one)}, bank))
        done = T.ge(bought, q)
        if j < k:
            ts += [
                Transition.make(store, T.and_(done, T.ge(i, zero)), {q: i, money: zero, bought: zero}, f"bank{j + 1}"),
                Transition.make(store, T.and_(done, T.lt(i, zero)), {q: zero, money: zero, bought: zero}, f"bank{j + 1}"),
            ]
        else:
            ts.append(Transition.make(store, done, {}, "office"))
        ts.append(Transition.make(store, T.not_(done), {bought: T.add(bought, one)}, store))
    g = Game("LIA", [i], [q, money, bought], locs, inv, ts)
    return g, Objective(BUCHI, {"office"})


def smarthome_lite() -> tuple[Game, Objective]:
    """One zone: heat up to a comfort level, then open the blinds."""
    dist = T.var("disturbance", REAL)
    temp, blinds = T.var("temperature", REAL), T.var("blinds", REAL)
    zero = _c(Fraction(0), REAL)
    one = _c(Fraction(1), REAL)
    half = _c(Fraction(1, 2), REAL)
    comfort = _c(Fraction(2), REAL)
    ts = [
        Transition.make("idle", T.ge(dist, zero), {temp: T.sub(temp, one), blinds: zero}, "heat"),
        Transition.make("idle", T.lt(dist, zero), {blinds: zero}, "heat"),
        Transition.make("heat", T.ge(temp, comfort), {}, "shade"),
        Transition.make("heat", T.lt(temp, comfort), {temp: T.add(temp, one)}, "heat"),
        Transition.make("shade", T.ge(blinds, one), {}, "idle"),
        Transition.make("shade", T.lt(blinds, one), {blinds: T.add(blinds, half)}, "shade"),
    ]
    g = Game("LRA", [dist], [temp, blinds], ["idle", "heat", "shade"], {}, ts)
    return g, Objective(BUCHI, {"idle"})


def generate(family: str, k: int | None = None) -> tuple[Game, Objective]:
    if family == "robot-collect":
        return robot_collect()
    if family == "smarthome-lite":
        return smarthome_lite()
    if family in ("chain", "chain-simple", "robot-deliver"):
        k = 1 if k is None else k
        return {"chain": chain, "chain-simple": chain_simple, "robot-deliver": robot_deliver}[family](k)
    raise ValueError(f"unknown benchmark family {family!r}; choose from {', '.join(FAMILIES)}")


def benchmark_text(family: str, k: int | None = None) -> str:
    g, obj = generate(family, k)
    return print_game(g, obj)


def all_instances():
    """The benchmark instances exercised by the test suite."""
    yield "robot-collect", None
    for k in (1, 2, 3):
        yield "chain-simple", k
    for k in (1, 2):
        yield "chain", k
    for k in (1, 2):
        yield "robot-deliver", k
    yield "smarthome-lite", None
