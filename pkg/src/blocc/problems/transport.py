"""Transportation network design as a bilevel problem.

The operator picks link capacities x (upper level); passengers split their
demand between the new network and an incumbent by minimizing a convex
objective of travel disutility plus flow entropy (lower level), subject to
per-market flow conservation (equalities) and link capacity limits
(inequalities coupling x and y).

Lower variable layout: y = [market shares y^od (one per market)] followed by
link flows stored market-major (all links of market 0, then market 1, ...).
Constraint order: capacity rows (one per link, inequality block) followed by
flow-conservation rows (station-within-market, equality block).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ParseError
from ..problem import BilevelOracle

Link = Tuple[object, object, float, float]          # (i, j, cost, time)
Market = Tuple[object, object, float, float, float]  # (o, d, w, m, t_ext)


@dataclass(frozen=True)
class NetworkSpec:
    stations: List[object]
    links: List[Link]              # (i, j, build cost c_ij, travel time t_ij)
    markets: List[Market]          # (o, d, demand, revenue, outside time)
    omega_t: float = -0.1          # travel-time utility coefficient (< 0)
    eps_box: float = 1e-3          # market-share box [eps, 1 - eps]
    ridge: float = 1e-3            # strong-convexity patch on link flows

    def validate(self) -> None:
        if not (0.0 < self.eps_box < 0.5):
            raise ConfigError(f"eps_box must be in (0, 0.5), got {self.eps_box}")
        if self.ridge < 0:
            raise ConfigError("ridge must be nonnegative")
        sset = set(self.stations)
        if len(sset) != len(self.stations):
            raise ConfigError("duplicate stations")
        for (i, j, c, t) in self.links:
            if i not in sset or j not in sset:
                raise ConfigError(f"link ({i}, {j}) references unknown station")
            if i == j:
                raise ConfigError(f"self-loop link ({i}, {j})")
            if c <= 0 or t <= 0:
                raise ConfigError(f"link ({i}, {j}) needs positive cost/time")
        for (o, d, w, m, te) in self.markets:
            if o == d:
                raise ConfigError(f"market with origin == destination: {o}")
            if o not in sset or d not in sset:
                raise ConfigError(f"market ({o}, {d}) references unknown station")
            if w <= 0 or m <= 0 or te <= 0:
                raise ConfigError(
                    f"market ({o}, {d}) needs positive demand/revenue/time")

    @property
    def dim_x(self) -> int:
        return len(self.links)

    @property
    def dim_y(self) -> int:
        return len(self.markets) * (1 + len(self.links))

    @property
    def num_ineq(self) -> int:
        return len(self.links)

    @property
    def num_eq(self) -> int:
        return len(self.stations) * len(self.markets)


def three_node_spec() -> NetworkSpec:
    """Complete 3-node instance: 6 links, 6 markets, unit demands."""
    stations = [1, 2, 3]
    links = [(1, 2, 1.0, 1.0), (1, 3, 10.0, 10.0), (2, 1, 1.0, 1.0),
             (2, 3, 3.0, 2.0), (3, 1, 10.0, 10.0), (3, 2, 3.0, 2.0)]
    markets = [(1, 2, 1.0, 2.0, 3.0), (1, 3, 1.0, 6.0, 3.0),
               (2, 1, 1.0, 2.0, 3.0), (2, 3, 1.0, 1.0, 3.0),
               (3, 1, 1.0, 6.0, 3.0), (3, 2, 1.0, 1.0, 3.0)]
    return NetworkSpec(stations, links, markets)


def nine_node_spec() -> NetworkSpec:
    """9-node grid-plus-diagonals instance: 15 segments (30 directed links),
    all 72 markets.  Demands, revenues, and construction costs are synthetic
    uniform placeholders; only the dimensions are meaningful."""
    stations = list(range(1, 10))
    # 3x3 grid (nodes numbered row-major) plus three diagonals.
    segments = [(1, 2, 1.0), (2, 3, 1.0), (4, 5, 1.0), (5, 6, 1.0),
                (7, 8, 1.0), (8, 9, 1.0), (1, 4, 1.0), (4, 7, 1.0),
                (2, 5, 1.0), (5, 8, 1.0), (3, 6, 1.0), (6, 9, 1.0),
                (1, 5, 2.0), (5, 9, 2.0), (3, 5, 2.0)]
    links = []
    for (i, j, t) in segments:
        links.append((i, j, 1.0, t))
        links.append((j, i, 1.0, t))
    markets = [(o, d, 1.0, 2.0, 3.0)
               for o in stations for d in stations if o != d]
    return NetworkSpec(stations, links, markets)


def parse_network_spec(text: str) -> NetworkSpec:
    """Parse the three-section network file format.

    Sections are introduced by a bare ``stations`` / ``links`` / ``markets``
    line; links are "i j cost time" rows, markets "o d demand revenue t_ext"
    rows.  Scalar fields use "key = value" (or "key value").  '#' starts a
    comment.
    """
    stations: List[object] = []
    links: List[Link] = []
    markets: List[Market] = []
    scalars = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line in ("stations", "links", "markets"):
            section = line
            continue
        tokens = line.replace('=', ' ').split()
        if tokens[0] in ("omega_t", "eps_box", "ridge"):
            if len(tokens) != 2:
                raise ParseError(f"line {lineno}: expected '{tokens[0]} value'")
            try:
                scalars[tokens[0]] = float(tokens[1])
            except ValueError:
                raise ParseError(f"line {lineno}: bad number {tokens[1]!r}")
            continue
        if section is None:
            raise ParseError(f"line {lineno}: data before any section header")
        try:
            if section == "stations":
                stations.extend(int(t) for t in tokens)
            elif section == "links":
                if len(tokens) != 4:
                    raise ParseError(
                        f"line {lineno}: links need 'i j cost time'")
                links.append((int(tokens[0]), int(tokens[1]),
                              float(tokens[2]), float(tokens[3])))
            else:
                if len(tokens) != 5:
                    raise ParseError(
                        f"line {lineno}: markets need 'o d demand revenue t_ext'")
                markets.append((int(tokens[0]), int(tokens[1]),
                                float(tokens[2]), float(tokens[3]),
                                float(tokens[4])))
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}")
    if not stations or not links or not markets:
        raise ParseError("file must define stations, links, and markets")
    spec = NetworkSpec(stations, links, markets,
                       omega_t=scalars.get("omega_t", -0.1),
                       eps_box=scalars.get("eps_box", 1e-3),
                       ridge=scalars.get("ridge", 1e-3))
    spec.validate()
    return spec


def build_transport(spec: NetworkSpec) -> BilevelOracle:
    spec.validate()
    idx = {s: k for k, s in enumerate(spec.stations)}
    S = len(spec.stations)
    A = len(spec.links)
    K = len(spec.markets)
    cost = np.array([c for (_, _, c, _) in spec.links])
    time = np.array([t for (_, _, _, t) in spec.links])
    w = np.array([wm for (_, _, wm, _, _) in spec.markets])
    rev = np.array([m for (_, _, _, m, _) in spec.markets])
    t_ext = np.array([te for (_, _, _, _, te) in spec.markets])
    o_idx = np.array([idx[o] for (o, _, _, _, _) in spec.markets])
    d_idx = np.array([idx[d] for (_, d, _, _, _) in spec.markets])
    # Node-link incidence: +1 where the link leaves the station, -1 enters.
    N = np.zeros((S, A))
    for a, (i, j, _, _) in enumerate(spec.links):
        N[idx[i], a] = 1.0
        N[idx[j], a] = -1.0
    omega = spec.omega_t
    ridge = spec.ridge
    eps = spec.eps_box
    dim_y = K + K * A
    market_rows = np.arange(K)

    def split_y(y):
        return y[:K], y[K:].reshape(K, A)

    def eval_f(x, y):
        yod, _ = split_y(y)
        return float(-np.dot(rev, yod) + np.dot(cost, x))

    def grad_f_x(x, y):
        return cost.copy()

    def grad_f_y(x, y):
        g = np.zeros(dim_y)
        g[:K] = -rev
        return g

    def eval_g(x, y):
        yod, Y = split_y(y)
        util = (np.sum((w * omega)[:, None] * time[None, :] * Y)
                + np.dot(w * omega * t_ext, 1.0 - yod))
        ent = (np.dot(w, yod * (np.log(yod) - 1.0))
               + np.dot(w, (1.0 - yod) * (np.log(1.0 - yod) - 1.0)))
        return float(-util + ent + ridge * np.sum(Y * Y))

    def grad_g_x(x, y):
        return np.zeros(A)

    def grad_g_y(x, y):
        yod, Y = split_y(y)
        g = np.empty(dim_y)
        g[:K] = w * (omega * t_ext + np.log(yod) - np.log(1.0 - yod))
        g[K:] = (-(w * omega)[:, None] * time[None, :]
                 + 2.0 * ridge * Y).ravel()
        return g

    def eval_gc(x, y):
        yod, Y = split_y(y)
        cap = Y.T @ w - x
        E = Y @ N.T
        E[market_rows, o_idx] -= yod
        E[market_rows, d_idx] += yod
        return np.concatenate([cap, E.ravel()])

    def vjp_gc_x(x, y, mu):
        return -mu[:A].astype(float)

    def vjp_gc_y(x, y, mu):
        mu_cap = mu[:A]
        Mu = mu[A:].reshape(K, S)
        g = np.empty(dim_y)
        g[:K] = -Mu[market_rows, o_idx] + Mu[market_rows, d_idx]
        g[K:] = (Mu @ N + np.outer(w, mu_cap)).ravel()
        return g

    def project_Y(v):
        # Market shares live in [eps, 1-eps] (keeps the entropy terms finite);
        # link flows only need 0 <= y_ij <= 1-eps, since forcing them above
        # eps would put a floor of K*eps on every capacity row.
        out = np.empty_like(v)
        out[:K] = np.clip(v[:K], eps, 1.0 - eps)
        out[K:] = np.clip(v[K:], 0.0, 1.0 - eps)
        return out

    return BilevelOracle(
        dim_x=A, dim_y=dim_y, num_ineq=A, num_eq=S * K,
        alpha_g=min(4.0 * float(np.min(w)), 2.0 * ridge),
        eval_f=eval_f, grad_f_x=grad_f_x, grad_f_y=grad_f_y,
        eval_g=eval_g, grad_g_x=grad_g_x, grad_g_y=grad_g_y,
        eval_gc=eval_gc, vjp_gc_x=vjp_gc_x, vjp_gc_y=vjp_gc_y,
        project_X=lambda v: np.maximum(v, 0.0),
        project_Y=project_Y,
        lipschitz=None,
        default_steps_g=(2e-3, 0.05),
        default_steps_F=(2e-3, 0.05),
    )
