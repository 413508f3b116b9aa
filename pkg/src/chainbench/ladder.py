"""Stabilized towers of cofibrations with twisted descent maps.

A tower holds chain complexes B_0..B_N with B_0 = 0, ascent chain maps
lambda_i: B_i -> B_{i+1} that split degreewise, and descent chain maps
alpha_i: B_i -> B_{i-1} (x) S into the previous level tensored with a
fixed bimodule S.  Ascent and descent commute: climbing then
descending equals descending then climbing one level lower, tensored.
Beyond the stabilization index every ascent is the identity, so the
finite data presents an eventually constant infinite tower.

Three families of questions are answered with exact certificates.
Membership: is the tower constant up to homotopy from a cut index on,
and is the value there contractible?  Locality: mapping a standard
probe tower in, is anything visible below the cut?  Factorization: a
map from a homotopy-constant tower into a levelwise contractible one
factors through a contractible tower assembled from pushouts.

A tower is called reduced when every descent is degreewise split
surjective.  Reduced input is a precondition for the locality checks
because it makes every descent kernel a free complex; it is validated
and rejected with an error, never repaired.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exact_linalg import (
    Matrix,
    ShapeMismatch,
    is_split_surjection,
    kernel_basis,
    kron,
    solve_linear,
    split_with_complement,
)
from .chains import (
    ChainComplex,
    GradedMap,
    SESData,
    cone,
    cylinder,
    direct_sum,
    find_contraction,
    homology,
    is_acyclic,
    pushout_along_cofibration,
    pushout_factor,
    shift_unsigned,
    validate_ses,
)
from .diagrams import Bimodule, tensor_map_with_bimodule, tensor_with_bimodule


@dataclass(frozen=True)
class D0Complex:
    """Eventually constant tower with split ascents and twisted descents.

    levels holds B_0..B_N, ascents holds lambda_0..lambda_{N-1}, and
    descents holds alpha_1..alpha_N (so descents[i] is alpha_{i+1}).
    witnesses stores, per ascent, the degreewise splitting data
    (retraction, complement, complement projection) certifying the
    cofibration property, or None when the ascent was admitted without
    it (see build's require_cofibrations flag).
    """

    bimodule: Bimodule
    levels: tuple
    ascents: tuple
    descents: tuple
    stabilization: int
    witnesses: tuple

    @staticmethod
    def build(
        bimodule,
        levels,
        ascents,
        descents,
        stabilization,
        require_cofibrations: bool = True,
    ) -> "D0Complex":
        levels = tuple(levels)
        ascents = tuple(ascents)
        descents = tuple(descents)
        top = len(levels) - 1
        if top < 0:
            raise ValueError("a tower needs at least the zero base level")
        if len(ascents) != top or len(descents) != top:
            raise ValueError("need one ascent and one descent per level step")
        if levels[0].total_rank != 0:
            raise ValueError("the base level must be the zero complex")
        ring = bimodule.base
        for i, c in enumerate(levels):
            if c.ring != ring:
                raise ValueError(f"level {i} is over the wrong ring")
        witnesses = []
        for i, f in enumerate(ascents):
            if (
                f.source != levels[i]
                or f.target != levels[i + 1]
                or f.degree != 0
                or not f.is_chain_map()
            ):
                raise ValueError(f"ascent {i} is not a chain map between adjacent levels")
            per = {}
            split = True
            for n in f.source.degrees():
                got = split_with_complement(f.block(n))
                if got is None:
                    if require_cofibrations:
                        raise ValueError(f"ascent {i} is not split injective in degree {n}")
                    split = False
                    break
                per[n] = got
            if split:
                witnesses.append(tuple(sorted((n, r, k, p) for n, (r, k, p) in per.items())))
            else:
                witnesses.append(None)
        for idx, a in enumerate(descents):
            i = idx + 1
            want = tensor_with_bimodule(levels[i - 1], bimodule)
            if (
                a.source != levels[i]
                or a.target != want
                or a.degree != 0
                or not a.is_chain_map()
            ):
                raise ValueError(f"descent {i} is not a chain map to the tensored lower level")
        for i in range(1, top):
            left = descents[i] @ ascents[i]
            right = tensor_map_with_bimodule(ascents[i - 1], bimodule) @ descents[i - 1]
            if left != right:
                raise ValueError(f"ascent and descent fail to commute at level {i}")
        if not 0 <= stabilization <= top:
            raise ValueError("stabilization index out of range")
        for i in range(stabilization, top):
            if ascents[i] != GradedMap.identity(levels[i]):
                raise ValueError(f"ascent {i} must be the identity beyond the stabilization index")
        return D0Complex(
            bimodule, levels, ascents, descents, int(stabilization), tuple(witnesses)
        )

    @property
    def top_index(self) -> int:
        return len(self.levels) - 1

    def level(self, i: int) -> ChainComplex:
        if not 0 <= i <= self.top_index:
            raise IndexError(f"no level {i}")
        return self.levels[i]

    def lambda_map(self, i: int) -> GradedMap:
        if not 0 <= i < self.top_index:
            raise IndexError(f"no ascent at level {i}")
        return self.ascents[i]

    def alpha_map(self, i: int) -> GradedMap:
        if not 1 <= i <= self.top_index:
            raise IndexError(f"no descent at level {i}")
        return self.descents[i - 1]

    def ascent_witness(self, i: int):
        """Degreewise (retraction, complement, projection) for ascent i."""
        if not 0 <= i < self.top_index:
            raise IndexError(f"no ascent at level {i}")
        got = self.witnesses[i]
        if got is None:
            return None
        return {n: (r, k, p) for n, r, k, p in got}


def d0_direct_sum(x: D0Complex, y: D0Complex) -> D0Complex:
    """Levelwise direct sum; ascents and descents act blockwise."""
    if x.bimodule != y.bimodule:
        raise ShapeMismatch("towers use different bimodules")
    if x.top_index != y.top_index:
        raise ShapeMismatch("towers have different lengths")
    s = x.bimodule
    sums = [direct_sum(x.level(i), y.level(i)) for i in range(x.top_index + 1)]
    ascents = []
    for i in range(x.top_index):
        here, up = sums[i], sums[i + 1]
        ascents.append(
            up.inclusions[0] @ x.lambda_map(i) @ here.projections[0]
            + up.inclusions[1] @ y.lambda_map(i) @ here.projections[1]
        )
    descents = []
    for i in range(1, x.top_index + 1):
        here, down = sums[i], sums[i - 1]
        descents.append(
            tensor_map_with_bimodule(down.inclusions[0], s) @ x.alpha_map(i) @ here.projections[0]
            + tensor_map_with_bimodule(down.inclusions[1], s) @ y.alpha_map(i) @ here.projections[1]
        )
    return D0Complex.build(
        s,
        [t.complex for t in sums],
        ascents,
        descents,
        max(x.stabilization, y.stabilization),
    )


def reduction_certificates(c: D0Complex):
    """Degreewise sections of every descent, or None when one fails.

    The i-th entry sends the tensored lower level back into level i
    with alpha_i composed after it giving the identity in every degree
    where the target is nonzero.  Sections are solved degreewise and
    are not expected to be chain maps.
    """
    out = []
    for i in range(1, c.top_index + 1):
        a = c.alpha_map(i)
        per = {}
        for n in a.target.degrees():
            sec = is_split_surjection(a.block(n))
            if sec is None:
                return None
            per[n] = sec
        out.append(GradedMap.build(a.target, a.source, 0, per))
    return tuple(out)


def is_reduced(c: D0Complex) -> bool:
    return reduction_certificates(c) is not None


@dataclass(frozen=True)
class ClassMembership:
    """Nested class verdicts for one tower at one cut index.

    in_bn certifies that every ascent from the cut on has contractible
    cone; in_an additionally certifies the cut level contractible.
    ascent_cone_contractions pairs each checked ascent index with its
    cone contraction or None; descent_sections carries the reduction
    certificates when the tower is reduced.
    """

    n: int
    in_bn: bool
    in_an: bool
    reduced: bool
    ascent_cone_contractions: tuple
    level_contraction: object
    descent_sections: tuple | None


def classify(x: D0Complex, n: int) -> ClassMembership:
    if not 0 <= n <= x.top_index:
        raise ValueError(f"cut index {n} out of range")
    cones = []
    constant = True
    for i in range(n, x.top_index):
        k = find_contraction(cone(x.lambda_map(i)).complex)
        cones.append((i, k))
        constant = constant and k is not None
    level_k = find_contraction(x.level(n))
    sections = reduction_certificates(x)
    return ClassMembership(
        n,
        constant,
        constant and level_k is not None,
        sections is not None,
        tuple(cones),
        level_k,
        sections,
    )


def test_object(kind: str, m: int, n_levels: int, bimodule: Bimodule) -> D0Complex:
    """Standard probe towers.

    g_m has m zero levels, then the rank-one complex concentrated in
    degree 0, constant onward with identity ascents and zero descents.
    g_m_cone caps that: the unit at level m maps by the cone inclusion
    into the cone on its identity, constant from level m + 1 on.
    """
    ring = bimodule.base
    zero = ChainComplex.zero_complex(ring)
    unit = ChainComplex.build(ring, {0: 1}, {})
    if kind == "g_m":
        if not 1 <= m <= n_levels:
            raise ValueError("probe index out of range")
        levels = [zero] * m + [unit] * (n_levels - m + 1)
        stab = m
        cap = None
    elif kind == "g_m_cone":
        if not 1 <= m <= n_levels - 1:
            raise ValueError("capped probe needs room for the cone level")
        cap = cone(GradedMap.identity(unit))
        levels = [zero] * m + [unit] + [cap.complex] * (n_levels - m)
        stab = m + 1
    else:
        raise ValueError(f"unknown probe kind {kind!r}")
    ascents = []
    for i in range(n_levels):
        src, tgt = levels[i], levels[i + 1]
        if src == tgt:
            ascents.append(GradedMap.identity(src))
        elif cap is not None and i == m:
            ascents.append(cap.inclusion)
        else:
            ascents.append(GradedMap.zero(src, tgt, 0))
    descents = [
        GradedMap.zero(levels[i], tensor_with_bimodule(levels[i - 1], bimodule), 0)
        for i in range(1, n_levels + 1)
    ]
    return D0Complex.build(bimodule, levels, ascents, descents, stab)


def constant_tower(c: ChainComplex, n_levels: int, bimodule: Bimodule) -> D0Complex:
    """Tower holding one complex at every positive level, zero descents."""
    if n_levels < 1:
        raise ValueError("need at least one positive level")
    zero = ChainComplex.zero_complex(bimodule.base)
    levels = [zero] + [c] * n_levels
    ascents = [GradedMap.zero(zero, c, 0)] + [GradedMap.identity(c)] * (n_levels - 1)
    descents = [
        GradedMap.zero(levels[i], tensor_with_bimodule(levels[i - 1], bimodule), 0)
        for i in range(1, n_levels + 1)
    ]
    return D0Complex.build(bimodule, levels, ascents, descents, 1)


def detect_probe(d: D0Complex):
    """Recognize a tower as one of the standard probes, structurally."""
    for m in range(1, d.top_index + 1):
        if d == test_object("g_m", m, d.top_index, d.bimodule):
            return "g_m", m
    for m in range(1, d.top_index):
        if d == test_object("g_m_cone", m, d.top_index, d.bimodule):
            return "g_m_cone", m
    return None, None


# ---------------------------------------------------------------------------
# Descent kernels


@dataclass(frozen=True)
class KernelData:
    """Degreewise kernel of a descent, with its inclusion chain map."""

    complex: ChainComplex
    inclusion: GradedMap


def kernel_complex(c: D0Complex, m: int) -> KernelData:
    """Kernel of alpha_m with the boundary induced from level m.

    The boundary of level m preserves the kernel because alpha_m is a
    chain map, so each boundary block is solved exactly in the kernel
    bases.  Over the integers the bases are saturated, which keeps the
    induced boundary integral.
    """
    if not 1 <= m <= c.top_index:
        raise ValueError(f"no descent at level {m}")
    a = c.alpha_map(m)
    b = c.level(m)
    bases = {n: kernel_basis(a.block(n)) for n in b.degrees()}
    ranks = {n: k.cols for n, k in bases.items()}
    diffs = {}
    for n in b.degrees():
        kn = bases[n]
        km = bases.get(n - 1)
        if kn.cols == 0 or km is None or km.cols == 0:
            continue
        sol = solve_linear(km, b.diff(n) @ kn)
        if sol is None:
            raise AssertionError("boundary escaped the descent kernel")
        diffs[n] = sol
    kc = ChainComplex.build(b.ring, ranks, diffs, validate=True)
    j = GradedMap.build(kc, b, 0, {n: k for n, k in bases.items() if k.cols})
    if not j.is_chain_map():
        raise AssertionError("kernel inclusion failed to be a chain map")
    return KernelData(kc, j)


def kernel_lambda(c: D0Complex, m: int, source: KernelData = None, target: KernelData = None) -> GradedMap:
    """Chain map induced by ascent m between adjacent descent kernels."""
    if not 1 <= m <= c.top_index - 1:
        raise ValueError(f"no adjacent kernels at level {m}")
    src = source if source is not None else kernel_complex(c, m)
    tgt = target if target is not None else kernel_complex(c, m + 1)
    lam = c.lambda_map(m)
    blocks = {}
    for n in src.complex.degrees():
        sol = solve_linear(tgt.inclusion.block(n), lam.block(n) @ src.inclusion.block(n))
        if sol is None:
            raise AssertionError("ascent escaped the next descent kernel")
        blocks[n] = sol
    f = GradedMap.build(src.complex, tgt.complex, 0, blocks)
    if not f.is_chain_map():
        raise AssertionError("induced kernel map failed to be a chain map")
    return f


# ---------------------------------------------------------------------------
# Morphisms of towers


@dataclass(frozen=True)
class D0Morphism:
    """Levelwise chain maps commuting with ascents and descents."""

    source: D0Complex
    target: D0Complex
    components: tuple

    @staticmethod
    def build(source, target, components) -> "D0Morphism":
        components = tuple(components)
        if source.bimodule != target.bimodule:
            raise ShapeMismatch("towers use different bimodules")
        if source.top_index != target.top_index:
            raise ShapeMismatch("towers have different lengths")
        if len(components) != source.top_index + 1:
            raise ValueError("need one component per level")
        for i, f in enumerate(components):
            if (
                f.source != source.level(i)
                or f.target != target.level(i)
                or f.degree != 0
                or not f.is_chain_map()
            ):
                raise ValueError(f"component {i} is not a chain map between the levels")
        for i in range(source.top_index):
            if components[i + 1] @ source.lambda_map(i) != target.lambda_map(i) @ components[i]:
                raise ValueError(f"components fail ascent compatibility at level {i}")
        for i in range(1, source.top_index + 1):
            left = target.alpha_map(i) @ components[i]
            right = tensor_map_with_bimodule(components[i - 1], source.bimodule) @ source.alpha_map(i)
            if left != right:
                raise ValueError(f"components fail descent compatibility at level {i}")
        return D0Morphism(source, target, components)

    def component(self, i: int) -> GradedMap:
        return self.components[i]


def d0_compose(late: D0Morphism, early: D0Morphism) -> D0Morphism:
    if early.target != late.source:
        raise ShapeMismatch("towers do not line up for composition")
    return D0Morphism.build(
        early.source,
        late.target,
        [late.component(i) @ early.component(i) for i in range(early.source.top_index + 1)],
    )


def d0_zero_morphism(source: D0Complex, target: D0Complex) -> D0Morphism:
    return D0Morphism.build(
        source,
        target,
        [GradedMap.zero(source.level(i), target.level(i), 0) for i in range(source.top_index + 1)],
    )


# ---------------------------------------------------------------------------
# Linear systems over families of level maps
#
# A degree-q family assigns to each level i and each source degree l a
# block (D_i)_l -> (C_i)_{l+q}.  Compatibility with ascents and
# descents is linear in the blocks, so families form the kernel of one
# exact linear system per degree q.  Conditions beyond the top level
# are implied: ascents are identities there, which forces the stable
# block, and the commuting squares push the last descent condition up.


class _BlockSystem:
    """Assembler for linear conditions on a family of matrix unknowns."""

    def __init__(self, ring):
        self.ring = ring
        self.sizes = {}
        self.offsets = {}
        self.total = 0
        self.row_groups = []

    def unknown(self, key, rows: int, cols: int) -> None:
        if rows <= 0 or cols <= 0 or key in self.sizes:
            return
        self.sizes[key] = (rows, cols)
        self.offsets[key] = self.total
        self.total += rows * cols

    def has(self, key) -> bool:
        return key in self.sizes

    def condition(self, row_count: int, terms) -> None:
        """Add row_count rows; terms pairs unknown keys with coefficients."""
        if row_count == 0:
            return
        kept = [(k, m) for k, m in terms if k in self.sizes]
        self.row_groups.append((row_count, kept))

    def matrix(self) -> Matrix:
        rows = sum(r for r, _ in self.row_groups)
        z = self.ring.zero
        grid = [[z] * self.total for _ in range(rows)]
        base = 0
        for row_count, kept in self.row_groups:
            for key, coeff in kept:
                off = self.offsets[key]
                for r in range(coeff.rows):
                    row = grid[base + r]
                    for s in range(coeff.cols):
                        v = coeff[r, s]
                        if v != z:
                            row[off + s] = self.ring.normalize(row[off + s] + v)
            base += row_count
        if rows == 0:
            return Matrix.zero(self.ring, 0, self.total)
        return Matrix.from_rows(self.ring, grid)

    def slice_rows(self, stacked: Matrix, key) -> Matrix:
        """Rows of a solution matrix belonging to one unknown block."""
        if key not in self.sizes:
            return Matrix.zero(self.ring, 0, stacked.cols)
        off = self.offsets[key]
        p, t = self.sizes[key]
        return stacked.rows_slice(off, off + p * t)


def _coeff_left(a: Matrix, t: int) -> Matrix:
    """Coefficient of X -> vec(A X) for X with t columns, row-major."""
    return kron(a, Matrix.identity(a.ring, t))


def _coeff_right(b: Matrix, p: int) -> Matrix:
    """Coefficient of X -> vec(X B) for X with p rows, row-major."""
    return kron(Matrix.identity(b.ring, p), b.transpose())


def _coeff_tensor_then(b: Matrix, p: int, s: int) -> Matrix:
    """Coefficient of X -> vec(kron(X, I_s) @ B), X with p rows.

    B has r*s rows and the result keeps row-major vec ordering on both
    sides, with the tensor factor fastest among the rows of kron(X, I).
    """
    r = b.rows // s
    t = b.cols
    ring = b.ring
    z = ring.zero
    grid = [[z] * (p * r) for _ in range(p * s * t)]
    for u in range(p):
        for v in range(s):
            for w in range(t):
                row = grid[(u * s + v) * t + w]
                for col in range(r):
                    row[u * r + col] = b[col * s + v, w]
    if p * s * t == 0 or p * r == 0:
        return Matrix.zero(ring, p * s * t, p * r)
    return Matrix.from_rows(ring, grid)


def _register_family(sys_: _BlockSystem, d: D0Complex, c: D0Complex, q: int) -> None:
    for i in range(d.top_index + 1):
        for l in d.level(i).degrees():
            sys_.unknown(("f", i, l), c.level(i).rank(l + q), d.level(i).rank(l))


def _compat_conditions(sys_: _BlockSystem, d: D0Complex, c: D0Complex, q: int) -> None:
    s = d.bimodule.rank
    for i in range(d.top_index):
        lam_d, lam_c = d.lambda_map(i), c.lambda_map(i)
        for l in d.level(i).degrees():
            t = d.level(i).rank(l)
            p1 = c.level(i + 1).rank(l + q)
            if t == 0 or p1 == 0:
                continue
            sys_.condition(
                p1 * t,
                [
                    (("f", i + 1, l), _coeff_right(lam_d.block(l), p1)),
                    (("f", i, l), -_coeff_left(lam_c.block(l + q), t)),
                ],
            )
    for i in range(1, d.top_index + 1):
        alpha_d, alpha_c = d.alpha_map(i), c.alpha_map(i)
        for l in d.level(i).degrees():
            t = d.level(i).rank(l)
            p2 = c.level(i - 1).rank(l + q)
            if t == 0 or p2 == 0:
                continue
            sys_.condition(
                p2 * s * t,
                [
                    (("f", i, l), _coeff_left(alpha_c.block(l + q), t)),
                    (("f", i - 1, l), -_coeff_tensor_then(alpha_d.block(l), p2, s)),
                ],
            )


def _chain_conditions(sys_: _BlockSystem, d: D0Complex, c: D0Complex) -> None:
    for i in range(d.top_index + 1):
        dc, cc = d.level(i), c.level(i)
        for l in dc.degrees():
            t = dc.rank(l)
            p_out = cc.rank(l - 1)
            if t == 0 or p_out == 0:
                continue
            sys_.condition(
                p_out * t,
                [
                    (("f", i, l), _coeff_left(cc.diff(l), t)),
                    (("f", i, l - 1), -_coeff_right(dc.diff(l), p_out)),
                ],
            )


def _leibniz_matrix(sys_q: _BlockSystem, sys_p: _BlockSystem, d: D0Complex, c: D0Complex, q: int) -> Matrix:
    """Matrix of the boundary operator on raw degree-q families."""
    ring = c.bimodule.base
    sign = ring.normalize(-1) if q % 2 == 0 else ring.one
    z = ring.zero
    grid = [[z] * sys_q.total for _ in range(sys_p.total)]

    def place(out_key, in_key, coeff):
        if not (sys_p.has(out_key) and sys_q.has(in_key)) or coeff.is_zero():
            return
        roff = sys_p.offsets[out_key]
        coff = sys_q.offsets[in_key]
        for r in range(coeff.rows):
            row = grid[roff + r]
            for s_ in range(coeff.cols):
                v = coeff[r, s_]
                if v != z:
                    row[coff + s_] = ring.normalize(row[coff + s_] + v)

    for i in range(d.top_index + 1):
        dc, cc = d.level(i), c.level(i)
        for l in dc.degrees():
            t = dc.rank(l)
            p = cc.rank(l + q)
            if t == 0 or p == 0:
                continue
            place(("f", i, l), ("f", i, l), _coeff_left(cc.diff(l + q), t))
            place(
                ("f", i, l + 1),
                ("f", i, l),
                _coeff_right(dc.diff(l + 1), p).scale(sign),
            )
    if sys_p.total == 0 or sys_q.total == 0:
        return Matrix.zero(ring, sys_p.total, sys_q.total)
    return Matrix.from_rows(ring, grid)


@dataclass(frozen=True)
class HomComplex:
    """Families of level maps out of a probe tower, as a chain complex.

    complex realizes the compatible degree-q families with the Leibniz
    boundary.  When the probe is recognized as g_m the complex is
    identified with the kernel of descent m by mutually inverse chain
    maps to_kernel and from_kernel.  When it is recognized as the
    capped probe, the complex sits in a short exact sequence: the
    kernel of descent m + 1, shifted one degree down, includes as the
    capped-slot coordinates, and evaluation at the unit slot projects
    onto the kernel of descent m.  connecting_matches_ascent records
    whether the boundary map of that sequence agrees on homology with
    the induced kernel ascent up to the alternating sign.
    """

    complex: ChainComplex
    probe_kind: str | None
    probe_index: int | None
    kernel: KernelData | None
    to_kernel: GradedMap | None
    from_kernel: GradedMap | None
    sub_kernel: KernelData | None
    ses: SESData | None
    connecting_matches_ascent: bool | None


def hom_complex(d: D0Complex, c: D0Complex) -> HomComplex:
    if d.bimodule != c.bimodule:
        raise ShapeMismatch("towers must share the bimodule")
    if d.top_index != c.top_index:
        raise ShapeMismatch("towers must have the same length")
    if reduction_certificates(c) is None:
        raise ValueError("descents must be degreewise split surjective")
    ring = c.bimodule.base
    qs = set()
    for i in range(d.top_index + 1):
        for l in d.level(i).degrees():
            for nc in c.level(i).degrees():
                qs.add(nc - l)
    systems = {}
    for q in sorted(qs):
        sys_ = _BlockSystem(ring)
        _register_family(sys_, d, c, q)
        _compat_conditions(sys_, d, c, q)
        systems[q] = (sys_, kernel_basis(sys_.matrix()))
    ranks = {q: k.cols for q, (_, k) in systems.items()}
    diffs = {}
    for q in sorted(qs):
        if q - 1 not in systems:
            continue
        sys_q, kq = systems[q]
        sys_p, kp = systems[q - 1]
        if kq.cols == 0:
            continue
        image = _leibniz_matrix(sys_q, sys_p, d, c, q) @ kq
        if kp.cols == 0:
            if not image.is_zero():
                raise AssertionError("boundary left the compatible families")
            continue
        sol = solve_linear(kp, image)
        if sol is None:
            raise AssertionError("boundary left the compatible families")
        diffs[q] = sol
    hom = ChainComplex.build(ring, ranks, diffs, validate=True)
    kind, m = detect_probe(d)
    kernel = to_kernel = from_kernel = None
    sub_kernel = ses = connecting = None
    if kind == "g_m":
        kernel = kernel_complex(c, m)
        to_kernel, from_kernel = _unit_probe_iso(systems, hom, c, m, kernel)
    elif kind == "g_m_cone":
        kernel = kernel_complex(c, m)
        sub_kernel = kernel_complex(c, m + 1)
        ses = _capped_probe_ses(systems, hom, c, m, kernel, sub_kernel)
        lam_tilde = kernel_lambda(c, m, kernel, sub_kernel)
        connecting = _connecting_matches(ses, kernel, sub_kernel, lam_tilde)
    return HomComplex(
        hom, kind, m, kernel, to_kernel, from_kernel, sub_kernel, ses, connecting
    )


def _climb_column(c: D0Complex, start_level: int, block_degree: int, seed: Matrix):
    """Push a level-start column matrix up the tower along the ascents."""
    out = {start_level: seed}
    acc = seed
    for i in range(start_level + 1, c.top_index + 1):
        acc = c.lambda_map(i - 1).block(block_degree) @ acc
        out[i] = acc
    return out


def _unit_probe_iso(systems, hom, c, m, kernel):
    """Mutually inverse chain maps between the family complex and Ker(alpha_m)."""
    ring = c.bimodule.base
    to_blocks, from_blocks = {}, {}
    for q, (sys_q, kq) in systems.items():
        dim = kq.cols
        kdim = kernel.complex.rank(q)
        if dim != kdim:
            raise AssertionError("family complex rank differs from the kernel rank")
        if dim == 0:
            continue
        evaluated = sys_q.slice_rows(kq, ("f", m, 0))
        x = solve_linear(kernel.inclusion.block(q), evaluated)
        if x is None:
            raise AssertionError("unit evaluation escaped the descent kernel")
        to_blocks[q] = x
        raw = Matrix.zero(ring, sys_q.total, kdim)
        climbed = _climb_column(c, m, q, kernel.inclusion.block(q))
        raw = _stack_into(sys_q, raw, {("f", i, 0): mat for i, mat in climbed.items()})
        y = solve_linear(kq, raw)
        if y is None:
            raise AssertionError("kernel family failed the compatibility conditions")
        from_blocks[q] = y
    to_kernel = GradedMap.build(hom, kernel.complex, 0, to_blocks)
    from_kernel = GradedMap.build(kernel.complex, hom, 0, from_blocks)
    if not to_kernel.is_chain_map() or not from_kernel.is_chain_map():
        raise AssertionError("kernel identification failed to be a chain map")
    if (to_kernel @ from_kernel) != GradedMap.identity(kernel.complex):
        raise AssertionError("kernel identification is not a retraction")
    if (from_kernel @ to_kernel) != GradedMap.identity(hom):
        raise AssertionError("kernel identification is not a section")
    return to_kernel, from_kernel


def _stack_into(sys_, raw: Matrix, placements) -> Matrix:
    """Overwrite unknown-block row slices of a raw-coordinate matrix."""
    rows = [list(r) for r in raw.entries]
    for key, mat in placements.items():
        if not sys_.has(key):
            if not mat.is_zero():
                raise AssertionError("placement targets an absent unknown block")
            continue
        off = sys_.offsets[key]
        p, t = sys_.sizes[key]
        if mat.rows != p * t:
            raise AssertionError("placement shape mismatch")
        for r in range(mat.rows):
            for s_ in range(mat.cols):
                rows[off + r][s_] = mat[r, s_]
    return Matrix.from_rows(raw.ring, rows)


def _capped_probe_ses(systems, hom, c, m, kernel, sub_kernel):
    """Short exact sequence around the capped-probe family complex."""
    ring = c.bimodule.base
    sub_shift = shift_unsigned(sub_kernel.complex, -1)
    i_blocks, p_blocks = {}, {}
    for q, (sys_q, kq) in systems.items():
        dim = kq.cols
        if dim:
            evaluated = sys_q.slice_rows(kq, ("f", m, 0))
            x = solve_linear(kernel.inclusion.block(q), evaluated)
            if x is None:
                raise AssertionError("unit evaluation escaped the descent kernel")
            p_blocks[q] = x
        kdim = sub_kernel.complex.rank(q + 1)
        if dim == 0 or kdim == 0:
            continue
        raw = Matrix.zero(ring, sys_q.total, kdim)
        climbed = _climb_column(c, m + 1, q + 1, sub_kernel.inclusion.block(q + 1))
        raw = _stack_into(sys_q, raw, {("f", i, 1): mat for i, mat in climbed.items()})
        y = solve_linear(kq, raw)
        if y is None:
            raise AssertionError("capped-slot family failed the compatibility conditions")
        i_blocks[q] = y
    i_map = GradedMap.build(sub_shift, hom, 0, i_blocks)
    pi_map = GradedMap.build(hom, kernel.complex, 0, p_blocks)
    if not i_map.is_chain_map() or not pi_map.is_chain_map():
        raise AssertionError("sequence maps failed to be chain maps")
    return validate_ses(i_map, pi_map)


def _connecting_matches(ses: SESData, kernel: KernelData, sub_kernel: KernelData, lam_tilde: GradedMap) -> bool:
    """Compare the sequence's boundary map with the kernel ascent.

    For each cycle z of the quotient, lift by the section, take the
    boundary, read it back through the retraction, and test that the
    result differs from (-1)^q lam_tilde(z) by a boundary.
    """
    ring = lam_tilde.source.ring
    for q in kernel.complex.degrees():
        cycles = kernel_basis(kernel.complex.diff(q))
        if cycles.cols == 0:
            continue
        lifted = ses.section.block(q) @ cycles
        boundaries = ses.middle.diff(q) @ lifted
        w = ses.retraction.block(q - 1) @ boundaries
        sign = ring.one if q % 2 == 0 else ring.normalize(-1)
        delta = w - (lam_tilde.block(q) @ cycles).scale(sign)
        if delta.is_zero():
            continue
        bnd = sub_kernel.complex.diff(q + 1)
        if bnd.cols == 0 or solve_linear(bnd, delta) is None:
            return False
    return True


@dataclass(frozen=True)
class MorphismSpace:
    """Solution space of all tower morphisms between two towers."""

    dimension: int
    basis: tuple


def morphism_space(d: D0Complex, c: D0Complex) -> MorphismSpace:
    """All degree-0 tower morphisms, as an exact kernel computation."""
    if d.bimodule != c.bimodule:
        raise ShapeMismatch("towers must share the bimodule")
    if d.top_index != c.top_index:
        raise ShapeMismatch("towers must have the same length")
    ring = d.bimodule.base
    sys_ = _BlockSystem(ring)
    _register_family(sys_, d, c, 0)
    _compat_conditions(sys_, d, c, 0)
    _chain_conditions(sys_, d, c)
    k = kernel_basis(sys_.matrix())
    basis = []
    for col in range(k.cols):
        vec = k.cols_slice(col, col + 1)
        components = []
        for i in range(d.top_index + 1):
            blocks = {}
            for l in d.level(i).degrees():
                key = ("f", i, l)
                if not sys_.has(key):
                    continue
                p, t = sys_.sizes[key]
                chunk = sys_.slice_rows(vec, key)
                rows = [
                    [chunk[r * t + s_, 0] for s_ in range(t)] for r in range(p)
                ]
                blocks[l] = Matrix.from_rows(ring, rows)
            components.append(GradedMap.build(d.level(i), c.level(i), 0, blocks))
        basis.append(D0Morphism.build(d, c, components))
    return MorphismSpace(k.cols, tuple(basis))


# ---------------------------------------------------------------------------
# Locality checks


@dataclass(frozen=True)
class BnLocalReport:
    """Levelwise contractibility verdict below a cut index.

    contractions pairs each level up to the cut with its contraction
    or None.  kernel_route reports the equivalent criterion through
    descent-kernel acyclicity when the tower is reduced; the two
    verdicts agree for reduced towers.
    """

    holds: bool
    failing_level: int | None
    contractions: tuple
    kernel_route: bool | None


def check_bn_local(c: D0Complex, n: int, require_reduced: bool = True) -> BnLocalReport:
    if not 0 <= n <= c.top_index:
        raise ValueError(f"cut index {n} out of range")
    reduced = is_reduced(c)
    if require_reduced and not reduced:
        raise ValueError("tower is not reduced; descents must split degreewise")
    contractions = []
    failing = None
    for i in range(n + 1):
        k = find_contraction(c.level(i))
        contractions.append((i, k))
        if k is None and failing is None:
            failing = i
    kernel_route = None
    if reduced:
        kernel_route = all(
            is_acyclic(kernel_complex(c, m).complex) for m in range(1, n + 1)
        )
    return BnLocalReport(failing is None, failing, tuple(contractions), kernel_route)


@dataclass(frozen=True)
class AnLocalReport:
    """Kernel-ascent equivalence verdict over a range of indices.

    checked lists (index, kernel verdict, square verdict) per index in
    the chosen range; holds summarizes the kernel route and
    square_holds the total-complex route.  witness_homology carries
    the nonzero homology of the cone over the failing kernel ascent.
    """

    holds: bool
    square_holds: bool
    bound: str
    failing_index: int | None
    witness_homology: tuple | None
    checked: tuple


def exact_square_total(c: D0Complex, m: int) -> ChainComplex:
    """Total complex deciding exactness of the square at index m.

    The square has the ascent on top, descents on the sides, and the
    tensored lower ascent below.  Fold it into a three-term column
    via the cone: the column is level m, then level m + 1 plus the
    tensored level m - 1, then tensored level m.  The square is exact,
    both a homotopy pushout and pullback, exactly when this total
    complex is acyclic.
    """
    if not 1 <= m <= c.top_index - 1:
        raise ValueError(f"no square at index {m}")
    s = c.bimodule
    mid = direct_sum(c.level(m + 1), tensor_with_bimodule(c.level(m - 1), s))
    first = mid.inclusions[0] @ c.lambda_map(m) + mid.inclusions[1] @ c.alpha_map(m)
    second = (
        c.alpha_map(m + 1) @ mid.projections[0]
        - tensor_map_with_bimodule(c.lambda_map(m - 1), s) @ mid.projections[1]
    )
    folded = cone(first)
    target = tensor_with_bimodule(c.level(m), s)
    blocks = {}
    for n in folded.complex.degrees():
        pad = Matrix.zero(c.bimodule.base, target.rank(n), c.level(m).rank(n - 1))
        blocks[n] = pad.hstack(second.block(n))
    closing = GradedMap.build(folded.complex, target, 0, blocks)
    if not closing.is_chain_map():
        raise AssertionError("folded square map failed to be a chain map")
    return cone(closing).complex


def check_an_local(c: D0Complex, n: int, bound: str = "inclusive") -> AnLocalReport:
    if bound not in ("strict", "inclusive"):
        raise ValueError("bound must be 'strict' or 'inclusive'")
    if not is_reduced(c):
        raise ValueError("tower is not reduced; descents must split degreewise")
    last = n - 1 if bound == "strict" else n
    if last > c.top_index - 1:
        raise ValueError("tower too short for the requested range")
    kernels = {}

    def kern(m):
        if m not in kernels:
            kernels[m] = kernel_complex(c, m)
        return kernels[m]

    checked = []
    failing = None
    witness = None
    for m in range(1, last + 1):
        lam_tilde = kernel_lambda(c, m, kern(m), kern(m + 1))
        folded = cone(lam_tilde).complex
        kernel_ok = is_acyclic(folded)
        square_ok = is_acyclic(exact_square_total(c, m))
        checked.append((m, kernel_ok, square_ok))
        if not kernel_ok and failing is None:
            failing = m
            witness = tuple(
                (deg, summary)
                for deg, summary in sorted(homology(folded).items())
                if not summary.is_trivial()
            )
    holds = all(ok for _, ok, _ in checked)
    square_holds = all(ok for _, _, ok in checked)
    return AnLocalReport(holds, square_holds, bound, failing, witness, tuple(checked))


# ---------------------------------------------------------------------------
# Factorization through a contractible tower


@dataclass(frozen=True)
class FactorizationData:
    """A map factored through a levelwise contractible tower.

    mid is the constructed tower, left maps the source into it, right
    maps it onto the original target, and contractions certifies every
    level of mid contractible.  right composed with left reproduces
    the input map exactly.
    """

    mid: D0Complex
    left: D0Morphism
    right: D0Morphism
    contractions: tuple


def factor_through_acyclic(f: D0Morphism, n: int) -> FactorizationData:
    """Factor f through a contractible tower, levelwise up to pushouts.

    Requires the source tower constant up to homotopy from the cut
    index on, and the target contractible through the cut.  Below the
    cut the middle tower is the target itself; above it each level is
    the pushout of the source ascent along the map built so far, with
    descents produced by the pushout's universal property.
    """
    d, target = f.source, f.target
    top = d.top_index
    if not 0 <= n <= top:
        raise ValueError(f"cut index {n} out of range")
    if not classify(d, n).in_bn:
        raise ValueError("source tower is not constant up to homotopy from the cut index")
    s = d.bimodule
    contractions = []
    for i in range(n + 1):
        k = find_contraction(target.level(i))
        if k is None:
            raise ValueError(f"target level {i} is not contractible")
        contractions.append(k)
    levels = [target.level(i) for i in range(n + 1)]
    ascents = [target.lambda_map(i) for i in range(n)]
    descents = [target.alpha_map(i) for i in range(1, n + 1)]
    g = [f.component(i) for i in range(n + 1)]
    e = [GradedMap.identity(levels[i]) for i in range(n + 1)]
    for i in range(n, top):
        data = pushout_along_cofibration(d.lambda_map(i), g[i])
        levels.append(data.complex)
        ascents.append(data.from_other)
        g.append(data.from_target)
        if i == 0:
            descents.append(
                GradedMap.zero(data.complex, tensor_with_bimodule(levels[0], s), 0)
            )
        else:
            u = tensor_map_with_bimodule(ascents[i - 1], s) @ descents[i - 1]
            w = tensor_map_with_bimodule(g[i], s) @ d.alpha_map(i + 1)
            descents.append(pushout_factor(data, u, w))
        e.append(pushout_factor(data, target.lambda_map(i) @ e[i], f.component(i + 1)))
    mid = D0Complex.build(s, levels, ascents, descents, min(max(d.stabilization, n), top))
    left = D0Morphism.build(d, mid, g)
    right = D0Morphism.build(mid, target, e)
    for i in range(top + 1):
        if right.component(i) @ left.component(i) != f.component(i):
            raise AssertionError("factorization failed to reproduce the map")
    for i in range(n + 1, top + 1):
        k = find_contraction(levels[i])
        if k is None:
            raise AssertionError("pushout level lost contractibility")
        contractions.append(k)
    return FactorizationData(mid, left, right, tuple(contractions))


def replace_level_with_cylinder(c: D0Complex, i: int) -> D0Complex:
    """Swap one level for the cylinder on its identity.

    The result is levelwise homotopy equivalent to the input, but the
    rerouted ascent out of the cylinder factors through a projection,
    so it is not split injective, and the rerouted descent is no
    longer surjective.  Structural validation is relaxed accordingly;
    the commuting squares still hold exactly.
    """
    if not 1 <= i <= c.top_index:
        raise ValueError(f"cannot replace level {i}")
    cyl = cylinder(GradedMap.identity(c.level(i)))
    levels = list(c.levels)
    levels[i] = cyl.complex
    ascents = list(c.ascents)
    descents = list(c.descents)
    ascents[i - 1] = cyl.incl_target @ c.lambda_map(i - 1)
    if i <= c.top_index - 1:
        ascents[i] = c.lambda_map(i) @ cyl.proj
    descents[i - 1] = c.alpha_map(i) @ cyl.proj
    if i + 1 <= c.top_index:
        descents[i] = tensor_map_with_bimodule(cyl.incl_target, c.bimodule) @ c.alpha_map(i + 1)
    stab = min(max(c.stabilization, i + 1), c.top_index)
    return D0Complex.build(
        c.bimodule, levels, ascents, descents, stab, require_cofibrations=False
    )
